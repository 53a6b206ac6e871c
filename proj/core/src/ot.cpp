#include "dmps/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

namespace dmps {
namespace {

// Scalings beyond exp(+-kAbsorb) are folded into the potentials.
constexpr double kAbsorb = 50.0;
constexpr Index kCheckEvery = 50;

double log_sum_exp(const Eigen::ArrayXd& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v - mx).exp().sum());
}

class SinkhornState {
 public:
  SinkhornState(Matrix cost, double reg)
      : c_(std::move(cost)),
        reg_(reg),
        log_a_(-std::log(static_cast<double>(c_.rows()))),
        log_b_(-std::log(static_cast<double>(c_.cols()))),
        f_(Vector::Zero(c_.rows())),
        g_(Vector::Zero(c_.cols())) {}

  // Exact log-domain updates; leave every row and column with a
  // representable mass before the cheap scaling loop starts.
  void log_half_steps() {
    const Index n = c_.rows();
    const Index m = c_.cols();
    for (Index j = 0; j < m; ++j) {
      const Eigen::ArrayXd t = (f_.array() - c_.col(j).array()) / reg_;
      g_(j) = reg_ * (log_b_ - log_sum_exp(t));
    }
    for (Index i = 0; i < n; ++i) {
      const Eigen::ArrayXd t = (g_.array() - c_.row(i).transpose().array()) / reg_;
      f_(i) = reg_ * (log_a_ - log_sum_exp(t));
    }
    rebase();
  }

  void rebase() {
    k_ = -c_;
    k_.colwise() += f_;
    k_.rowwise() += g_.transpose();
    k_ = (k_.array() / reg_).exp().matrix();
    u_ = Vector::Ones(c_.rows());
    v_ = Vector::Ones(c_.cols());
    rows_exact_ = false;
  }

  void absorb() {
    f_.array() += reg_ * u_.array().log();
    g_.array() += reg_ * v_.array().log();
    rebase();
  }

  bool scaling_step() {
    const double a = std::exp(log_a_);
    const double b = std::exp(log_b_);
    const Vector ktu = apply_transpose(u_);
    // Rows of the current plan already match a after a u-update, so its
    // marginal violation is the column error, read off the same product.
    prior_violation_ = rows_exact_ ? (v_.cwiseProduct(ktu).array() - b).abs().maxCoeff()
                                   : std::numeric_limits<double>::infinity();
    if (!(ktu.minCoeff() > 0.0)) return false;
    const Vector v = (b / ktu.array()).matrix();
    const Vector kv = apply(v);
    if (!(kv.minCoeff() > 0.0) || !v.allFinite()) return false;
    const Vector u = (a / kv.array()).matrix();
    if (!u.allFinite()) return false;
    u_ = u;
    v_ = v;
    rows_exact_ = true;
    const double big = std::max(u_.array().log().abs().maxCoeff(), v_.array().log().abs().maxCoeff());
    if (big > kAbsorb) absorb();
    return true;
  }

  double residual() const {
    const double a = std::exp(log_a_);
    const double b = std::exp(log_b_);
    const Vector rows = u_.cwiseProduct(apply(v_));
    const Vector cols = v_.cwiseProduct(apply_transpose(u_));
    return std::max((rows.array() - a).abs().maxCoeff(), (cols.array() - b).abs().maxCoeff());
  }

  /// Marginal violation of the plan as it stood before the last scaling
  /// step; infinite when that plan had not just been row-normalized.
  double prior_violation() const { return prior_violation_; }

  double transport_cost() const {
    return (u_.asDiagonal() * k_.cwiseProduct(c_) * v_.asDiagonal()).sum();
  }

 private:
  // Matrix-vector products split over threads by columns; Eigen runs GEMV
  // on one thread.
  Vector apply_transpose(const Vector& u) const {
    Vector out(k_.cols());
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < k_.cols(); ++j) out(j) = k_.col(j).dot(u);
    return out;
  }

  Vector apply(const Vector& v) const {
#ifdef _OPENMP
    const Index n = k_.rows();
    const Index m = k_.cols();
    const int threads = omp_get_max_threads();
    if (threads > 1 && n * m > (1 << 16)) {
      // Row blocks keep each thread on its own slice of the output.
      Vector out(n);
      const Index block = (n + threads - 1) / threads;
#pragma omp parallel for schedule(static)
      for (int t = 0; t < threads; ++t) {
        const Index lo = std::min<Index>(n, t * block);
        const Index len = std::min<Index>(n, lo + block) - lo;
        if (len > 0) out.segment(lo, len).noalias() = k_.middleRows(lo, len) * v;
      }
      return out;
    }
#endif
    return k_ * v;
  }

  Matrix c_;
  double reg_;
  double log_a_;
  double log_b_;
  Vector f_;
  Vector g_;
  Matrix k_;
  Vector u_;
  Vector v_;
  bool rows_exact_ = false;
  double prior_violation_ = std::numeric_limits<double>::infinity();
};

}  // namespace

std::string to_string(CostKind kind) {
  return kind == CostKind::Euclidean ? "euclidean" : "sqeuclidean";
}

CostKind parse_cost_kind(const std::string& name) {
  if (name == "euclidean") return CostKind::Euclidean;
  if (name == "sqeuclidean") return CostKind::SqEuclidean;
  throw InvalidInputError("unknown cost '" + name + "' (expected euclidean or sqeuclidean)");
}

std::string to_json(const OTReport& report) {
  nlohmann::json j;
  j["cost"] = report.cost;
  j["iters"] = report.iters;
  j["residual"] = report.residual;
  j["converged"] = report.converged;
  j["reg"] = report.reg;
  return j.dump();
}

Matrix cost_matrix(const Matrix& a, const Matrix& b, CostKind kind) {
  if (a.cols() != b.cols()) throw InvalidInputError("cost_matrix: dimension mismatch");
  const Vector an = a.rowwise().squaredNorm();
  const Vector bn = b.rowwise().squaredNorm();
  Matrix c = (-2.0 * a * b.transpose()).colwise() + an;
  c.rowwise() += bn.transpose();
  c = c.cwiseMax(0.0);
  if (kind == CostKind::Euclidean) c = c.cwiseSqrt();
  return c;
}

OTReport sinkhorn_distance(const SampleMatrix& a, const SampleMatrix& b, const OTConfig& cfg) {
  require_same_dim(a, b, "sinkhorn_distance");
  if (!(cfg.reg > 0.0) || !std::isfinite(cfg.reg)) {
    throw InvalidInputError("sinkhorn_distance: reg must be positive and finite");
  }
  if (cfg.max_iters < 1) throw InvalidInputError("sinkhorn_distance: max_iters must be >= 1");
  if (!(cfg.marginal_tol > 0.0)) {
    throw InvalidInputError("sinkhorn_distance: marginal_tol must be positive");
  }
  SinkhornState state(cost_matrix(a.data(), b.data(), cfg.cost), cfg.reg);
  state.log_half_steps();

  OTReport report;
  report.reg = cfg.reg;
  report.iters = 1;
  report.residual = state.residual();
  while (report.residual >= cfg.marginal_tol && report.iters < cfg.max_iters) {
    if (!state.scaling_step()) {
      // A scaling under- or overflowed: restart from exact log updates.
      state.absorb();
      state.log_half_steps();
    }
    ++report.iters;
    if (state.prior_violation() < cfg.marginal_tol || report.iters % kCheckEvery == 0 ||
        report.iters == cfg.max_iters) {
      report.residual = state.residual();
    }
  }
  report.residual = state.residual();
  report.converged = report.residual < cfg.marginal_tol;
  report.cost = state.transport_cost();
  return report;
}

double exact_ot_small(const SampleMatrix& a, const SampleMatrix& b, CostKind kind) {
  require_same_dim(a, b, "exact_ot_small");
  const Index n = a.count();
  if (b.count() != n) throw InvalidInputError("exact_ot_small: point counts must match");
  if (n > 64) throw InvalidInputError("exact_ot_small: at most 64 points per side");
  const Matrix c = cost_matrix(a.data(), b.data(), kind);

  // Hungarian method with potentials, 1-based with a dummy column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (Index j = 1; j <= n; ++j) total += c(p[j] - 1, j - 1);
  return total / static_cast<double>(n);
}

}  // namespace dmps
