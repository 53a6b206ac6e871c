#pragma once

// Spectral form of the learned generator and the inverse-generator drift.

#include "dmps/kernel.hpp"

#include <filesystem>
#include <memory>

namespace dmps {

/// Eigenpairs of the symmetric training kernel, sorted by descending eigenvalue.
/// Eigenvectors are orthonormal in the plain-sum inner product.
struct Spectrum {
  Vector lambdas;
  Matrix phis;  // column i is phi_i evaluated at the training points
  Bandwidth epsilon;
};

struct InverseSpectrum {
  Vector weights;            // eps / ((1 - lambda_i) lambda_i^2), zero when truncated
  std::vector<Index> kept;   // ascending mode indices with nonzero weight
};

struct TruncationOptions {
  /// Modes with (1 - lambda) / eps below this are treated as the constant
  /// mode. Non-positive selects 1e-8 / eps.
  double sigma_min = 0.0;
  /// Modes with lambda below this are dropped. The inverse weight grows like
  /// lambda^-2, so tiny modes turn sampling noise into huge drifts.
  double lambda_min = 1e-2;
};

Spectrum eigendecompose(const Matrix& p_train, Bandwidth eps);

InverseSpectrum inverse_spectrum(const Spectrum& spec, double sigma_min, double lambda_min);

/// (f - P f) / eps at the training points, with P rebuilt from the spectrum.
Vector apply_generator(const Spectrum& spec, const Vector& f_train);

/// Truncated inverse of apply_generator on the kept modes:
/// Phi diag(1 / sigma_i) Phi^T g.
Vector apply_inverse_generator(const Spectrum& spec, const InverseSpectrum& inv,
                               const Vector& g_train);

/// A fitted diffusion-map model: training kernel, spectrum, truncation and
/// the cached middle factor Phi diag(w) Phi^T. Immutable after construction.
class DiffusionModel {
 public:
  static DiffusionModel fit(const SampleMatrix& train, Bandwidth eps,
                            const TruncationOptions& opts = {});

  /// Rebuilds a model from its stored parts (used by deserialization).
  DiffusionModel(SampleMatrix train, Spectrum spectrum, InverseSpectrum inverse,
                 Matrix middle, TruncationOptions opts);

  const SampleMatrix& train() const noexcept { return kernel_->train(); }
  Bandwidth bandwidth() const noexcept { return kernel_->bandwidth(); }
  const TrainingKernel& kernel() const noexcept { return *kernel_; }
  const Spectrum& spectrum() const noexcept { return spectrum_; }
  const InverseSpectrum& inverse() const noexcept { return inverse_; }
  const Matrix& middle_factor() const noexcept { return middle_; }
  const TruncationOptions& truncation() const noexcept { return opts_; }
  Index dim() const noexcept { return kernel_->dim(); }

 private:
  DiffusionModel(std::shared_ptr<const TrainingKernel> kernel, Spectrum spectrum,
                 InverseSpectrum inverse, Matrix middle, TruncationOptions opts);

  std::shared_ptr<const TrainingKernel> kernel_;
  Spectrum spectrum_;
  InverseSpectrum inverse_;
  Matrix middle_;
  TruncationOptions opts_;
};

/// Row i = (1/M) sum_j grad_1 K_{L^-1}(x_i, x_j) for the M particles.
Matrix drift_field(const DiffusionModel& model, const Matrix& particles);
Matrix drift_field(const DiffusionModel& model, const SampleMatrix& particles);

void save_model(const DiffusionModel& model, const std::filesystem::path& path);
DiffusionModel load_model(const std::filesystem::path& path);

}  // namespace dmps
