#pragma once

// Gaussian kernel with anisotropic (square-root degree) normalization and the
// forward / backward / symmetric Markov kernels built from it. All
// normalizing sums run over the training set with plain (unweighted) sums.

#include "dmps/types.hpp"

namespace dmps {

/// eps = med^2 / (2 ln N), med = median of the N(N-1)/2 pairwise distances.
Bandwidth median_bandwidth(const SampleMatrix& train);

/// Same rule applied to a raw matrix; used for per-iteration SVGD bandwidths.
Bandwidth median_bandwidth(const Matrix& points);

/// K(i, j) = exp(-|x_i - y_j|^2 / (2 eps)).
Matrix gaussian_kernel(const SampleMatrix& x, const SampleMatrix& y, Bandwidth eps);

/// Gradient of K with respect to its first argument:
/// -((x_i - y_j) / eps) * K(x_i, y_j).
CoordinateSlices gaussian_kernel_grad1(const SampleMatrix& x, const SampleMatrix& y,
                                       Bandwidth eps);

struct KernelBundle {
  Matrix K;
  Matrix M;
  Matrix Pf;
  Matrix Pb;
  Matrix P;
  Vector d_row;  // sum_i K(x, z_i) for each row point x
  Vector d_col;  // sum_i K(z_i, y) for each column point y
};

struct KernelGradientBundle {
  CoordinateSlices gradK;
  CoordinateSlices gradM;
  CoordinateSlices gradPf;
  CoordinateSlices gradPb;
  CoordinateSlices gradP;
};

KernelBundle build_kernel_bundle(const SampleMatrix& x, const SampleMatrix& y,
                                 const SampleMatrix& train, Bandwidth eps);

/// First-argument gradients of every kernel in `bundle`. The degree gradient
/// uses the chain rule d sqrt(d(x)) = grad d(x) / (2 sqrt(d(x))).
KernelGradientBundle build_kernel_gradients(const SampleMatrix& x, const SampleMatrix& y,
                                            const SampleMatrix& train, Bandwidth eps,
                                            const KernelBundle& bundle);

/// Rows of the normalized kernels between arbitrary query points and the
/// training set, as consumed by the particle samplers.
struct QueryRows {
  Matrix P;              // P(x_q, z_k)
  Matrix Pb;             // P^b(x_q, z_k), rows sum to one
  CoordinateSlices gradP;  // empty unless requested
};

/// Caches the training-set degree information so query rows cost O(N d)
/// each. Row evaluation is shift-stabilized: queries far from every
/// training point get a vanishing forward part instead of 0/0.
class TrainingKernel {
 public:
  TrainingKernel(SampleMatrix train, Bandwidth eps);

  const SampleMatrix& train() const noexcept { return train_; }
  Bandwidth bandwidth() const noexcept { return eps_; }
  Index size() const noexcept { return train_.count(); }
  Index dim() const noexcept { return train_.dim(); }

  /// Symmetric kernel P on training-vs-training points.
  const Matrix& train_P() const noexcept { return p_train_; }

  QueryRows rows(const Matrix& queries, bool with_gradient) const;

  /// P^b rows only. The query degree cancels, so this needs one GEMM and one
  /// exponential per entry.
  Matrix backward_rows(const Matrix& queries) const;

 private:
  SampleMatrix train_;
  Bandwidth eps_;
  Vector sqrt_degree_;  // sqrt(d(z_k))
  Vector m_colsum_;     // sum_i M(z_i, z_k)
  Matrix p_train_;
};

}  // namespace dmps
