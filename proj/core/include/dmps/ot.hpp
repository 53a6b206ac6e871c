#pragma once

// Entropic optimal transport between two equally weighted point clouds.

#include "dmps/types.hpp"

#include <string>

namespace dmps {

enum class CostKind { Euclidean, SqEuclidean };

std::string to_string(CostKind kind);
CostKind parse_cost_kind(const std::string& name);

struct OTConfig {
  double reg = 1e-2;
  Index max_iters = 10000;
  double marginal_tol = 1e-6;
  CostKind cost = CostKind::Euclidean;
};

struct OTReport {
  double cost = 0.0;     // <plan, cost matrix>, no entropy term
  Index iters = 0;
  double residual = 0.0; // max absolute marginal violation
  bool converged = false;
  double reg = 0.0;
};

/// Single-line JSON record.
std::string to_json(const OTReport& report);

Matrix cost_matrix(const Matrix& a, const Matrix& b, CostKind kind);

/// Sinkhorn-Knopp with log-potential absorption: scaling iterations run on a
/// kernel rebased on the current potentials, and the potentials absorb the
/// scalings whenever they grow large, so tiny reg does not underflow.
OTReport sinkhorn_distance(const SampleMatrix& a, const SampleMatrix& b, const OTConfig& cfg = {});

/// Exact average assignment cost (Hungarian method). Counts must match and
/// be at most 64.
double exact_ot_small(const SampleMatrix& a, const SampleMatrix& b,
                      CostKind kind = CostKind::Euclidean);

}  // namespace dmps
