#include "dmps/samplers.hpp"

#include "dmps/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dmps {
namespace {

double resolve_step(const SamplerConfig& cfg, double fallback, const char* who) {
  const double h = cfg.step_size.value_or(fallback);
  if (!(h > 0.0) || !std::isfinite(h)) {
    std::ostringstream os;
    os << who << ": step size must be positive and finite, got " << h;
    throw InvalidInputError(os.str());
  }
  if (cfg.max_iters < 1) throw InvalidInputError(std::string(who) + ": max_iters must be >= 1");
  if (cfg.snapshot_every < 0) {
    throw InvalidInputError(std::string(who) + ": snapshot_every must be >= 0");
  }
  return h;
}

double resolve_tol(const SamplerConfig& cfg, double fallback, const char* who) {
  const double tol = cfg.tol.value_or(fallback);
  if (!(tol >= 0.0)) throw InvalidInputError(std::string(who) + ": tol must be nonnegative");
  return tol;
}

void check_finite(const Matrix& x, Index iter, const char* who) {
  if (!x.allFinite()) {
    std::ostringstream os;
    os << who << ": particles became non-finite at iteration " << iter;
    throw DivergenceError(static_cast<int>(iter), os.str());
  }
}

double mean_displacement(const Matrix& step) { return step.rowwise().norm().mean(); }

// Same rule as median_bandwidth, reading the squared distances SVGD already
// has. Returns fallback when the median distance is zero.
double median_bandwidth_from_sq(const Matrix& sq, std::vector<double>& buf, double fallback) {
  const Index m = sq.rows();
  buf.clear();
  for (Index j = 1; j < m; ++j) {
    for (Index i = 0; i < j; ++i) buf.push_back(sq(i, j));
  }
  const std::size_t mid = buf.size() / 2;
  const auto mid_it = buf.begin() + static_cast<std::ptrdiff_t>(mid);
  std::nth_element(buf.begin(), mid_it, buf.end());
  double med = std::sqrt(*mid_it);
  if (buf.size() % 2 == 0) med = 0.5 * (med + std::sqrt(*std::max_element(buf.begin(), mid_it)));
  if (!(med > 0.0)) return fallback;
  return med * med / (2.0 * std::log(static_cast<double>(m)));
}

class SnapshotRecorder {
 public:
  SnapshotRecorder(Trajectory& traj, Index every) : traj_(traj), every_(every) {}

  void record(Index iter, const Matrix& x) {
    traj_.snapshots.emplace_back(iter, SampleMatrix(x));
  }
  void maybe(Index iter, const Matrix& x) {
    if (every_ > 0 && iter % every_ == 0) record(iter, x);
  }
  void finish(Index iter, const Matrix& x) {
    if (traj_.snapshots.back().first != iter) record(iter, x);
    traj_.iters_run = iter;
  }

 private:
  Trajectory& traj_;
  Index every_;
};

}  // namespace

double dmps_default_step(const DiffusionModel& model) {
  return 0.1 * static_cast<double>(model.train().count());
}

double dmps_default_tol(const DiffusionModel& model) {
  return 1e-4 * std::sqrt(model.bandwidth().value());
}

Trajectory dmps_run(const DiffusionModel& model, const SampleMatrix& init, const SamplerConfig& cfg) {
  const double h = resolve_step(cfg, dmps_default_step(model), "dmps");
  const double tol = resolve_tol(cfg, dmps_default_tol(model), "dmps");
  if (init.dim() != model.dim()) {
    throw InvalidInputError("dmps: particle dimension does not match the model");
  }
  Trajectory traj;
  SnapshotRecorder rec(traj, cfg.snapshot_every);
  Matrix x = init.data();
  rec.record(0, x);
  Index iter = 0;
  while (iter < cfg.max_iters) {
    ++iter;
    const Matrix step = h * drift_field(model, x);
    check_finite(step, iter, "dmps");
    x -= step;
    check_finite(x, iter, "dmps");
    rec.maybe(iter, x);
    if (mean_displacement(step) < tol) {
      traj.converged = true;
      break;
    }
  }
  rec.finish(iter, x);
  return traj;
}

Matrix score_at(const DiffusionModel& model, const Matrix& queries) {
  const double e = model.bandwidth().value();
  return (2.0 / e) * (model.kernel().backward_rows(queries) * model.train().data() - queries);
}

Matrix estimate_score(const DiffusionModel& model) {
  return score_at(model, model.train().data());
}

ScoreFn learned_score(const DiffusionModel& model) {
  return [&model](const Matrix& q) { return score_at(model, q); };
}

Trajectory svgd_run(const ScoreFn& score, const SampleMatrix& init, const SamplerConfig& cfg) {
  const double h = resolve_step(cfg, kSvgdDefaultStep, "svgd");
  const double tol = resolve_tol(cfg, kSvgdDefaultTol, "svgd");
  const Index m = init.count();
  const Index d = init.dim();
  Trajectory traj;
  SnapshotRecorder rec(traj, cfg.snapshot_every);
  Matrix x = init.data();
  rec.record(0, x);
  double bw = 1.0;
  Index iter = 0;
  Matrix sq(m, m);
  std::vector<double> upper;
  upper.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  while (iter < cfg.max_iters) {
    ++iter;
    const Matrix s = score(x);
    if (s.rows() != m || s.cols() != d) throw InvalidInputError("svgd: score has the wrong shape");
    const Eigen::VectorXd norms = x.rowwise().squaredNorm();
    sq.noalias() = -2.0 * x * x.transpose();
    sq.colwise() += norms;
    sq.rowwise() += norms.transpose();
    sq = sq.cwiseMax(0.0);
    // all particles coincident: keep the previous bandwidth
    if (m >= 2) bw = median_bandwidth_from_sq(sq, upper, bw);
    const Matrix k = (-sq.array() / (2.0 * bw)).exp().matrix();
    // sum_j grad_1 K(x_j, x_i) = sum_j (x_i - x_j) K_ij / bw
    const Vector ksum = k.rowwise().sum();
    Matrix repulse = (x.array().colwise() * ksum.array()).matrix() - k * x;
    repulse /= bw;
    const Matrix step = (h / static_cast<double>(m)) * (k * s + repulse);
    check_finite(step, iter, "svgd");
    x += step;
    rec.maybe(iter, x);
    if (mean_displacement(step) < tol) {
      traj.converged = true;
      break;
    }
  }
  rec.finish(iter, x);
  return traj;
}

Trajectory ula_run(const ScoreFn& score, const SampleMatrix& init, const SamplerConfig& cfg) {
  const double h = resolve_step(cfg, kUlaDefaultStep, "ula");
  const Index m = init.count();
  const Index d = init.dim();
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    streams.push_back(make_rng(derive_seed(cfg.seed, "ula-particle", static_cast<std::uint64_t>(i))));
  }
  const double noise = std::sqrt(2.0 * h);
  Trajectory traj;
  SnapshotRecorder rec(traj, cfg.snapshot_every);
  Matrix x = init.data();
  rec.record(0, x);
  Matrix xi(m, d);
  for (Index iter = 1; iter <= cfg.max_iters; ++iter) {
    const Matrix s = score(x);
    if (s.rows() != m || s.cols() != d) throw InvalidInputError("ula: score has the wrong shape");
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < m; ++i) {
      std::normal_distribution<double> normal(0.0, 1.0);
      Rng& rng = streams[static_cast<std::size_t>(i)];
      for (Index c = 0; c < d; ++c) xi(i, c) = normal(rng);
    }
    x += h * s + noise * xi;
    check_finite(x, iter, "ula");
    rec.maybe(iter, x);
  }
  traj.converged = true;
  rec.finish(cfg.max_iters, x);
  return traj;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open trajectory file for writing: " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  const Index d = traj.snapshots.empty() ? 0 : traj.final_state().dim();
  out << "iter,particle_id";
  for (Index c = 0; c < d; ++c) out << ",x_" << c;
  out << '\n';
  for (const auto& [iter, snap] : traj.snapshots) {
    for (Index i = 0; i < snap.count(); ++i) {
      out << iter << ',' << i;
      for (Index c = 0; c < d; ++c) out << ',' << snap.data()(i, c);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing trajectory file: " + path.string());
}

}  // namespace dmps
