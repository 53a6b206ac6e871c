#include "dmps/spectral.hpp"

#include <cmath>
#include <sstream>

namespace dmps {
namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kClampTol = 1e-8;

}  // namespace

Spectrum eigendecompose(const Matrix& p_train, Bandwidth eps) {
  if (p_train.rows() != p_train.cols() || p_train.rows() == 0) {
    throw InvalidInputError("eigendecompose: kernel matrix must be square and non-empty");
  }
  if (!p_train.allFinite()) {
    throw InvalidInputError("eigendecompose: kernel matrix has non-finite entries");
  }
  const double scale = std::max(1.0, p_train.cwiseAbs().maxCoeff());
  const double asym = (p_train - p_train.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale) {
    std::ostringstream os;
    os << "eigendecompose: kernel matrix is not symmetric (max |P - P^T| = " << asym << ")";
    throw InvalidInputError(os.str());
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(p_train);
  if (solver.info() != Eigen::Success) {
    throw DegenerateSpectrumError("eigendecompose: symmetric eigensolver failed");
  }
  const Index n = p_train.rows();
  Spectrum spec{Vector(n), Matrix(n, n), eps};
  for (Index i = 0; i < n; ++i) {
    // Eigen returns ascending order.
    const Index src = n - 1 - i;
    double lambda = solver.eigenvalues()(src);
    if (lambda > 1.0 && lambda <= 1.0 + kClampTol) lambda = 1.0;
    if (lambda < 0.0 && lambda >= -kClampTol) lambda = 0.0;
    spec.lambdas(i) = lambda;

    auto col = spec.phis.col(i);
    col = solver.eigenvectors().col(src);
    Index pivot = 0;
    col.cwiseAbs().maxCoeff(&pivot);
    if (col(pivot) < 0.0) col = -col;
  }
  return spec;
}

InverseSpectrum inverse_spectrum(const Spectrum& spec, double sigma_min, double lambda_min) {
  if (!(sigma_min > 0.0) || !(lambda_min > 0.0)) {
    throw InvalidInputError("inverse_spectrum: thresholds must be positive");
  }
  const double eps = spec.epsilon.value();
  const Index n = spec.lambdas.size();
  InverseSpectrum inv{Vector::Zero(n), {}};
  for (Index i = 0; i < n; ++i) {
    const double lambda = spec.lambdas(i);
    const double sigma = (1.0 - lambda) / eps;
    if (sigma < sigma_min || lambda < lambda_min) continue;
    inv.weights(i) = eps / ((1.0 - lambda) * lambda * lambda);
    inv.kept.push_back(i);
  }
  if (inv.kept.empty()) {
    throw DegenerateSpectrumError("inverse_spectrum: every mode was truncated");
  }
  return inv;
}

Vector apply_generator(const Spectrum& spec, const Vector& f_train) {
  if (f_train.size() != spec.phis.rows()) {
    throw InvalidInputError("apply_generator: vector length does not match the spectrum");
  }
  const Vector coeffs = spec.phis.transpose() * f_train;
  const Vector pf = spec.phis * spec.lambdas.cwiseProduct(coeffs);
  return (f_train - pf) / spec.epsilon.value();
}

Vector apply_inverse_generator(const Spectrum& spec, const InverseSpectrum& inv,
                               const Vector& g_train) {
  if (g_train.size() != spec.phis.rows()) {
    throw InvalidInputError("apply_inverse_generator: vector length does not match the spectrum");
  }
  Vector out = Vector::Zero(g_train.size());
  for (Index i : inv.kept) {
    const double lambda = spec.lambdas(i);
    const double inv_sigma = lambda * inv.weights(i) * lambda;
    out += spec.phis.col(i) * (inv_sigma * spec.phis.col(i).dot(g_train));
  }
  return out;
}

DiffusionModel DiffusionModel::fit(const SampleMatrix& train, Bandwidth eps,
                                   const TruncationOptions& opts) {
  auto kernel = std::make_shared<const TrainingKernel>(train, eps);
  Spectrum spec = eigendecompose(kernel->train_P(), eps);
  TruncationOptions resolved = opts;
  if (!(resolved.sigma_min > 0.0)) resolved.sigma_min = 1e-8 / eps.value();
  InverseSpectrum inv = inverse_spectrum(spec, resolved.sigma_min, resolved.lambda_min);

  const Index n = train.count();
  const auto kept = static_cast<Index>(inv.kept.size());
  Matrix phi_kept(n, kept);
  Vector w_kept(kept);
  for (Index j = 0; j < kept; ++j) {
    phi_kept.col(j) = spec.phis.col(inv.kept[static_cast<std::size_t>(j)]);
    w_kept(j) = inv.weights(inv.kept[static_cast<std::size_t>(j)]);
  }
  Matrix middle = phi_kept * w_kept.asDiagonal() * phi_kept.transpose();
  return DiffusionModel(std::move(kernel), std::move(spec), std::move(inv), std::move(middle),
                        resolved);
}

DiffusionModel::DiffusionModel(SampleMatrix train, Spectrum spectrum, InverseSpectrum inverse,
                               Matrix middle, TruncationOptions opts)
    : DiffusionModel(std::make_shared<const TrainingKernel>(std::move(train), spectrum.epsilon),
                     std::move(spectrum), std::move(inverse), std::move(middle), opts) {}

DiffusionModel::DiffusionModel(std::shared_ptr<const TrainingKernel> kernel, Spectrum spectrum,
                               InverseSpectrum inverse, Matrix middle, TruncationOptions opts)
    : kernel_(std::move(kernel)),
      spectrum_(std::move(spectrum)),
      inverse_(std::move(inverse)),
      middle_(std::move(middle)),
      opts_(opts) {
  const Index n = kernel_->size();
  if (spectrum_.lambdas.size() != n || spectrum_.phis.rows() != n || spectrum_.phis.cols() != n ||
      inverse_.weights.size() != n || middle_.rows() != n || middle_.cols() != n) {
    throw InvalidInputError("DiffusionModel: component shapes are inconsistent");
  }
}

Matrix drift_field(const DiffusionModel& model, const Matrix& particles) {
  const QueryRows rows = model.kernel().rows(particles, /*with_gradient=*/true);
  // sum_j P(z, x_j) / M; P is symmetric in its arguments.
  const Vector p_mean = rows.P.colwise().mean().transpose();
  const Vector u = model.middle_factor() * p_mean;
  Matrix drift(particles.rows(), particles.cols());
  for (Index c = 0; c < particles.cols(); ++c) {
    drift.col(c) = rows.gradP[static_cast<std::size_t>(c)] * u;
  }
  return drift;
}

Matrix drift_field(const DiffusionModel& model, const SampleMatrix& particles) {
  return drift_field(model, particles.data());
}

}  // namespace dmps
