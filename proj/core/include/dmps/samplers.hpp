#pragma once

// Particle samplers: the diffusion-map particle system and two score-driven
// baselines (SVGD and unadjusted Langevin).

#include "dmps/spectral.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <utility>

namespace dmps {

struct SamplerConfig {
  /// Unset picks a per-sampler default (see dmps_default_step etc.).
  std::optional<double> step_size;
  Index max_iters = 1000;
  /// Mean per-particle displacement threshold. Unset means 1e-4 * sqrt(eps)
  /// for DMPS and 1e-5 for SVGD. ULA always runs max_iters steps.
  std::optional<double> tol;
  std::uint64_t seed = 1;
  /// Keep every k-th iterate; 0 keeps only the first and last.
  Index snapshot_every = 0;
};

struct Trajectory {
  std::vector<std::pair<Index, SampleMatrix>> snapshots;
  bool converged = false;
  Index iters_run = 0;

  const SampleMatrix& final_state() const { return snapshots.back().second; }
};

/// The drift carries no 1/N, so its size shrinks like 1/N; 0.1 N keeps the
/// per-step displacement independent of the training-set size.
double dmps_default_step(const DiffusionModel& model);
double dmps_default_tol(const DiffusionModel& model);

inline constexpr double kSvgdDefaultStep = 0.05;
inline constexpr double kSvgdDefaultTol = 1e-5;
inline constexpr double kUlaDefaultStep = 5e-4;

Trajectory dmps_run(const DiffusionModel& model, const SampleMatrix& init, const SamplerConfig& cfg);

using ScoreFn = std::function<Matrix(const Matrix&)>;

/// 2 (sum_k P^b(x, z_k) z_k - x) / eps for each query row.
Matrix score_at(const DiffusionModel& model, const Matrix& queries);

/// score_at evaluated at the training points.
Matrix estimate_score(const DiffusionModel& model);

ScoreFn learned_score(const DiffusionModel& model);

Trajectory svgd_run(const ScoreFn& score, const SampleMatrix& init, const SamplerConfig& cfg);

/// Each particle draws from its own stream derived from cfg.seed, so the
/// result does not depend on thread count.
Trajectory ula_run(const ScoreFn& score, const SampleMatrix& init, const SamplerConfig& cfg);

/// Columns iter, particle_id, x_0..x_{d-1}.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace dmps
