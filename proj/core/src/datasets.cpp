#include "dmps/datasets.hpp"

#include "dmps/kernel.hpp"
#include "dmps/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace dmps {
namespace {

void require_count(Index n, const char* what) {
  if (n < 1) {
    std::ostringstream os;
    os << what << ": sample count must be positive, got " << n;
    throw InvalidInputError(os.str());
  }
}

// Distance from (x, y) to the half-annulus around (cx, cy) with radii
// [inner, outer]; upper == true keeps y >= cy. Below the base line the
// nearest point always lies on one of the two base segments.
double half_annulus_distance(double x, double y, double cx, double cy, double inner,
                             double outer, bool upper) {
  const double dx = x - cx;
  const double dy = upper ? y - cy : cy - y;
  if (dy >= 0.0) {
    const double r = std::hypot(dx, dy);
    return std::max({inner - r, r - outer, 0.0});
  }
  const auto segment = [&](double a, double b) {
    const double px = std::clamp(dx, a, b);
    return std::hypot(dx - px, dy);
  };
  return std::min(segment(inner, outer), segment(-outer, -inner));
}

}  // namespace

Eigen::Matrix3d ArcParams::default_rotation() {
  // Tilt the xy-plane: rotate about x by 60 degrees, then about z by 30.
  const Eigen::Matrix3d rx =
      Eigen::AngleAxisd(std::numbers::pi / 3.0, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d rz =
      Eigen::AngleAxisd(std::numbers::pi / 6.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return rz * rx;
}

bool in_mickey(double x, double y, const MickeyParams& p) {
  const auto in_disk = [&](double cx, double cy, double r) {
    return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
  };
  return in_disk(0.0, 0.0, p.head_radius) || in_disk(-p.ear_x, p.ear_y, p.ear_radius) ||
         in_disk(p.ear_x, p.ear_y, p.ear_radius);
}

int two_moons_component(double x, double y, const TwoMoonsParams& p) {
  if (half_annulus_distance(x, y, 0.0, 0.0, p.inner, p.outer, true) == 0.0) return 0;
  if (half_annulus_distance(x, y, p.center_x, p.center_y, p.inner, p.outer, false) == 0.0) {
    return 1;
  }
  return -1;
}

double validate_two_moons(const TwoMoonsParams& p) {
  if (!(p.inner > 0.0) || !(p.outer > p.inner) || !std::isfinite(p.outer) ||
      !std::isfinite(p.center_x) || !std::isfinite(p.center_y)) {
    throw InvalidInputError("two moons: need 0 < inner < outer and finite centers");
  }
  // Walk the boundary of moon 0 and measure the exact distance to moon 1.
  constexpr int kArcSteps = 20000;
  constexpr int kSegmentSteps = 2000;
  double gap = std::numeric_limits<double>::infinity();
  const auto visit = [&](double x, double y) {
    gap = std::min(gap, half_annulus_distance(x, y, p.center_x, p.center_y, p.inner, p.outer, false));
  };
  for (int i = 0; i <= kArcSteps; ++i) {
    const double t = std::numbers::pi * i / kArcSteps;
    visit(p.outer * std::cos(t), p.outer * std::sin(t));
    visit(p.inner * std::cos(t), p.inner * std::sin(t));
  }
  for (int i = 0; i <= kSegmentSteps; ++i) {
    const double r = p.inner + (p.outer - p.inner) * i / kSegmentSteps;
    visit(r, 0.0);
    visit(-r, 0.0);
  }
  // Moon 1 could sit entirely inside moon 0 without touching its boundary.
  if (two_moons_component(p.center_x + 0.5 * (p.inner + p.outer), p.center_y, p) == 0) gap = 0.0;
  if (!(gap > 0.0)) {
    throw InvalidInputError("two moons: the components intersect for these parameters");
  }
  return gap;
}

SampleMatrix sample_mickey(Index n, std::uint64_t seed, const MickeyParams& p) {
  require_count(n, "sample_mickey");
  if (!(p.head_radius > 0.0) || !(p.ear_radius > 0.0)) {
    throw InvalidInputError("sample_mickey: radii must be positive");
  }
  Rng rng = make_rng(seed);
  const double xmax = std::max(p.head_radius, std::abs(p.ear_x) + p.ear_radius);
  const double ymin = std::min(-p.head_radius, p.ear_y - p.ear_radius);
  const double ymax = std::max(p.head_radius, p.ear_y + p.ear_radius);
  std::uniform_real_distribution<double> ux(-xmax, xmax);
  std::uniform_real_distribution<double> uy(ymin, ymax);
  Matrix out(n, 2);
  for (Index i = 0; i < n;) {
    const double x = ux(rng);
    const double y = uy(rng);
    if (!in_mickey(x, y, p)) continue;
    out(i, 0) = x;
    out(i, 1) = y;
    ++i;
  }
  return SampleMatrix(std::move(out));
}

SampleMatrix sample_two_moons(Index n, std::uint64_t seed, const TwoMoonsParams& p) {
  require_count(n, "sample_two_moons");
  validate_two_moons(p);
  Rng rng = make_rng(seed);
  const double xmin = std::min(-p.outer, p.center_x - p.outer);
  const double xmax = std::max(p.outer, p.center_x + p.outer);
  const double ymin = std::min(0.0, p.center_y - p.outer);
  const double ymax = std::max(p.outer, p.center_y);
  std::uniform_real_distribution<double> ux(xmin, xmax);
  std::uniform_real_distribution<double> uy(ymin, ymax);
  Matrix out(n, 2);
  for (Index i = 0; i < n;) {
    const double x = ux(rng);
    const double y = uy(rng);
    if (two_moons_component(x, y, p) < 0) continue;
    out(i, 0) = x;
    out(i, 1) = y;
    ++i;
  }
  return SampleMatrix(std::move(out));
}

SampleMatrix sample_arc(Index n, std::uint64_t seed, const ArcParams& p) {
  require_count(n, "sample_arc");
  if (!(p.theta_max > p.theta_min) || !(p.radial_noise >= 0.0)) {
    throw InvalidInputError("sample_arc: need theta_min < theta_max and nonnegative noise");
  }
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> angle(p.theta_min, p.theta_max);
  std::uniform_real_distribution<double> noise(0.0, p.radial_noise);
  Matrix out(n, 3);
  for (Index i = 0; i < n; ++i) {
    const double theta = angle(rng);
    const double r = 1.0 + (p.radial_noise > 0.0 ? noise(rng) : 0.0);
    const Eigen::Vector3d flat(r * std::cos(theta), r * std::sin(theta), 0.0);
    out.row(i) = (p.rotation * flat).transpose();
  }
  return SampleMatrix(std::move(out));
}

SampleMatrix sample_hypersemisphere(Index n, Index d, std::uint64_t seed) {
  require_count(n, "sample_hypersemisphere");
  if (d < 2) throw InvalidInputError("sample_hypersemisphere: dimension must be at least 2");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, d);
  for (Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd g(d);
    double norm = 0.0;
    do {
      for (Index c = 0; c < d; ++c) g(c) = normal(rng);
      norm = g.norm();
    } while (!(norm > 0.0));
    g /= norm;
    g(d - 1) = std::abs(g(d - 1));
    out.row(i) = g;
  }
  return SampleMatrix(std::move(out));
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.rows() < 2) throw InvalidInputError("Standardizer: need at least two rows");
  Standardizer s;
  s.mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - s.mean;
  s.scale = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
  if (!(s.scale.minCoeff() > 0.0)) {
    throw DegenerateDataError("Standardizer: a feature has zero variance");
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& raw) const {
  return ((raw.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

Matrix Standardizer::invert(const Matrix& standardized) const {
  return ((standardized.array().rowwise() * scale.array()).rowwise() + mean.array()).matrix();
}

GluonTrainingSet subsample_standardized(const Matrix& slice, Index n_train, std::uint64_t seed) {
  if (n_train < 2 || n_train > slice.rows()) {
    std::ostringstream os;
    os << "gluon: n_train must lie in [2, " << slice.rows() << "], got " << n_train;
    throw InvalidInputError(os.str());
  }
  std::vector<Index> idx(static_cast<std::size_t>(slice.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng = make_rng(seed);
  // Partial Fisher-Yates: the first n_train entries are a uniform draw.
  for (Index i = 0; i < n_train; ++i) {
    std::uniform_int_distribution<Index> pick(i, slice.rows() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(n_train));
  Matrix raw(n_train, slice.cols());
  for (Index i = 0; i < n_train; ++i) raw.row(i) = slice.row(idx[static_cast<std::size_t>(i)]);
  Standardizer norm = Standardizer::fit(raw);
  return GluonTrainingSet{SampleMatrix(norm.apply(raw)), std::move(norm), std::move(idx)};
}

GluonTrainingSet load_gluon(const GluonSource& src, Index particle_index, Index n_train,
                            std::uint64_t seed) {
  return subsample_standardized(load_gluon_slice(src, particle_index), n_train, seed);
}

std::string to_string(InitPolicy policy) {
  switch (policy) {
    case InitPolicy::SubsampleJitter:
      return "subsample-jitter";
    case InitPolicy::UniformBox:
      return "uniform-box";
    case InitPolicy::Explicit:
      return "explicit";
  }
  return "unknown";
}

InitPolicy parse_init_policy(const std::string& name) {
  if (name == "subsample-jitter") return InitPolicy::SubsampleJitter;
  if (name == "uniform-box") return InitPolicy::UniformBox;
  if (name == "explicit") return InitPolicy::Explicit;
  throw InvalidInputError("unknown init policy '" + name + "'");
}

SampleMatrix init_particles(const InitSpec& spec, Index m, Index d, std::uint64_t seed,
                            const SampleMatrix* train, std::optional<Bandwidth> eps) {
  switch (spec.policy) {
    case InitPolicy::Explicit: {
      if (!spec.points) throw InvalidInputError("explicit init policy needs points");
      return *spec.points;
    }
    case InitPolicy::UniformBox: {
      require_count(m, "init_particles");
      if (d < 1 || !(spec.hi > spec.lo)) {
        throw InvalidInputError("uniform-box init needs d >= 1 and lo < hi");
      }
      Rng rng = make_rng(seed);
      std::uniform_real_distribution<double> u(spec.lo, spec.hi);
      Matrix out(m, d);
      for (Index i = 0; i < m; ++i) {
        for (Index c = 0; c < d; ++c) out(i, c) = u(rng);
      }
      return SampleMatrix(std::move(out));
    }
    case InitPolicy::SubsampleJitter: {
      require_count(m, "init_particles");
      if (train == nullptr) {
        throw InvalidInputError("subsample-jitter init needs training samples");
      }
      if (train->dim() != d) {
        throw InvalidInputError("subsample-jitter init: dimension does not match training data");
      }
      const double sd = std::sqrt((eps ? *eps : median_bandwidth(*train)).value()) / 10.0;
      Rng rng = make_rng(seed);
      const Index n = train->count();
      std::vector<Index> picks(static_cast<std::size_t>(m));
      if (m <= n) {
        std::vector<Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Index{0});
        for (Index i = 0; i < m; ++i) {
          std::uniform_int_distribution<Index> pick(i, n - 1);
          std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
        }
        std::copy_n(idx.begin(), m, picks.begin());
      } else {
        std::uniform_int_distribution<Index> pick(0, n - 1);
        for (auto& p : picks) p = pick(rng);
      }
      std::normal_distribution<double> jitter(0.0, sd);
      Matrix out(m, d);
      for (Index i = 0; i < m; ++i) {
        out.row(i) = train->row(picks[static_cast<std::size_t>(i)]);
        for (Index c = 0; c < d; ++c) out(i, c) += jitter(rng);
      }
      return SampleMatrix(std::move(out));
    }
  }
  throw InvalidInputError("unknown init policy");
}

}  // namespace dmps
