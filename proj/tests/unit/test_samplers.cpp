#include "dmps/samplers.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace dmps;
using dmps::testing::random_points;

namespace {

SampleMatrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return SampleMatrix(std::move(m));
}

SampleMatrix mirrored(const SampleMatrix& half) {
  Matrix m(2 * half.count(), half.dim());
  m << half.data(), -half.data();
  return SampleMatrix(m);
}

const DiffusionModel& gaussian_model() {
  static const DiffusionModel model = [] {
    const SampleMatrix z = random_points(2000, 1, 1);
    return DiffusionModel::fit(z, median_bandwidth(z));
  }();
  return model;
}

}  // namespace

TEST(Dmps, RejectsBadStep) {
  const DiffusionModel m = DiffusionModel::fit(random_points(20, 2, 1), Bandwidth(0.5));
  SamplerConfig cfg;
  cfg.step_size = 0.0;
  EXPECT_THROW(dmps_run(m, random_points(3, 2, 2), cfg), InvalidInputError);
  cfg.step_size = -1.0;
  EXPECT_THROW(dmps_run(m, random_points(3, 2, 2), cfg), InvalidInputError);
  cfg.step_size = 1.0;
  EXPECT_THROW(dmps_run(m, random_points(3, 3, 2), cfg), InvalidInputError);
}

TEST(Dmps, OneStepUnrolling) {
  const DiffusionModel m = DiffusionModel::fit(random_points(30, 2, 3), Bandwidth(0.5));
  const SampleMatrix x0 = random_points(6, 2, 4);
  SamplerConfig cfg;
  cfg.step_size = 2.5;
  cfg.max_iters = 1;
  const Trajectory t = dmps_run(m, x0, cfg);
  const Matrix expected = x0.data() - 2.5 * drift_field(m, x0);
  EXPECT_LT((t.final_state().data() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(t.iters_run, 1);

  cfg.max_iters = 50;
  cfg.tol = std::numeric_limits<double>::infinity();
  const Trajectory t2 = dmps_run(m, x0, cfg);
  EXPECT_LT((t2.final_state().data() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(t2.converged);
}

TEST(Dmps, Deterministic) {
  const DiffusionModel m = DiffusionModel::fit(random_points(50, 2, 5), Bandwidth(0.3));
  const SampleMatrix x0 = random_points(10, 2, 6);
  SamplerConfig cfg;
  cfg.max_iters = 20;
  cfg.snapshot_every = 5;
  const Trajectory a = dmps_run(m, x0, cfg);
  const Trajectory b = dmps_run(m, x0, cfg);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    EXPECT_EQ(a.snapshots[i].first, b.snapshots[i].first);
    EXPECT_TRUE(a.snapshots[i].second == b.snapshots[i].second);
  }
}

TEST(Dmps, ReflectionSymmetryPreserved) {
  const DiffusionModel m = DiffusionModel::fit(mirrored(column({0.2, 0.5, 0.9, 1.3, 1.6})),
                                               Bandwidth(0.1));
  const SampleMatrix x0 = mirrored(column({0.1, 0.7}));
  SamplerConfig cfg;
  cfg.max_iters = 30;
  cfg.snapshot_every = 1;
  const Trajectory t = dmps_run(m, x0, cfg);
  for (const auto& [iter, snap] : t.snapshots) {
    EXPECT_NEAR(snap.data()(0, 0), -snap.data()(2, 0), 1e-8) << "iter " << iter;
    EXPECT_NEAR(snap.data()(1, 0), -snap.data()(3, 0), 1e-8) << "iter " << iter;
  }
}

TEST(Dmps, SnapshotsAlwaysHaveFirstAndLast) {
  const DiffusionModel m = DiffusionModel::fit(random_points(30, 2, 7), Bandwidth(0.5));
  SamplerConfig cfg;
  cfg.max_iters = 7;
  cfg.tol = 0.0;
  const Trajectory t = dmps_run(m, random_points(4, 2, 8), cfg);
  ASSERT_EQ(t.snapshots.size(), 2u);
  EXPECT_EQ(t.snapshots.front().first, 0);
  EXPECT_EQ(t.snapshots.back().first, 7);
  EXPECT_EQ(t.final_state().count(), 4);
}

TEST(Score, GaussianRecovery) {
  const DiffusionModel& m = gaussian_model();
  const Matrix s = estimate_score(m);
  double err = 0.0;
  Index count = 0;
  for (Index i = 0; i < s.rows(); ++i) {
    const double z = m.train().data()(i, 0);
    if (std::abs(z) > 1.0) continue;
    err += std::abs(s(i, 0) + z);
    ++count;
  }
  EXPECT_LT(err / static_cast<double>(count), 0.15);
}

TEST(Score, QueryAtHalf) {
  Matrix q(1, 1);
  q << 0.5;
  EXPECT_NEAR(score_at(gaussian_model(), q)(0, 0), -0.5, 0.15);
}

TEST(Score, TrainingQueryMatchesEstimate) {
  const DiffusionModel m = DiffusionModel::fit(random_points(80, 2, 9), Bandwidth(0.4));
  const Matrix s = estimate_score(m);
  const Matrix q = score_at(m, m.train().data().topRows(5));
  EXPECT_LT((q - s.topRows(5)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Score, SymmetricTrainingGivesOddScore) {
  const SampleMatrix z = mirrored(random_points(40, 2, 10));
  const DiffusionModel m = DiffusionModel::fit(z, median_bandwidth(z));
  const Matrix s = estimate_score(m);
  EXPECT_LT((s.topRows(40) + s.bottomRows(40)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Score, FarFieldPointsAtNearestTrainingPoint) {
  const SampleMatrix z = random_points(50, 2, 11);
  const Bandwidth eps(0.05);
  const DiffusionModel m = DiffusionModel::fit(z, eps);
  Matrix q(1, 2);
  q << 8.0, 6.0;
  Index nearest = 0;
  (z.data().rowwise() - q.row(0)).rowwise().squaredNorm().minCoeff(&nearest);
  const Eigen::RowVectorXd gap = z.data().row(nearest) - q.row(0);
  const Eigen::RowVectorXd s = score_at(m, q).row(0);
  // The variance-eps kernel gives twice the classical |x - z| / eps.
  EXPECT_NEAR(s.norm() / (2.0 * gap.norm() / eps.value()), 1.0, 1e-3);
  EXPECT_GT(s.dot(gap), 0.0);
}

TEST(Score, UniformIntervalBulkHasNoDrift) {
  Rng rng = make_rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix z(2000, 1);
  for (Index i = 0; i < 2000; ++i) z(i, 0) = u(rng);
  const SampleMatrix train(z);
  const DiffusionModel m = DiffusionModel::fit(train, median_bandwidth(train));
  const double margin = 3.0 * std::sqrt(m.bandwidth().value());
  const Matrix s = estimate_score(m);
  double sum = 0.0;
  Index count = 0;
  for (Index i = 0; i < 2000; ++i) {
    if (std::abs(z(i, 0)) > 1.0 - margin) continue;
    sum += s(i, 0);
    ++count;
  }
  ASSERT_GT(count, 100);
  EXPECT_LT(std::abs(sum / static_cast<double>(count)), 0.5);
}

TEST(Svgd, SingleParticleFollowsScore) {
  const ScoreFn score = [](const Matrix& x) { return Matrix(-x); };
  SamplerConfig cfg;
  cfg.step_size = 0.1;
  cfg.max_iters = 1;
  Matrix x0(1, 2);
  x0 << 1.0, -2.0;
  const Trajectory t = svgd_run(score, SampleMatrix(x0), cfg);
  EXPECT_LT((t.final_state().data() - (x0 - 0.1 * x0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Svgd, GaussianLearnedScoreMoments) {
  const DiffusionModel& m = gaussian_model();
  Rng rng = make_rng(13);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Matrix x0(100, 1);
  for (Index i = 0; i < 100; ++i) x0(i, 0) = u(rng);
  SamplerConfig cfg;
  cfg.step_size = 0.1;
  cfg.max_iters = 5000;
  const Trajectory t = svgd_run(learned_score(m), SampleMatrix(x0), cfg);
  const Vector x = t.final_state().data().col(0);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.1);
  EXPECT_NEAR(var, 1.0, 0.2);
}

TEST(Svgd, Deterministic) {
  const ScoreFn score = [](const Matrix& x) { return Matrix(-x); };
  SamplerConfig cfg;
  cfg.max_iters = 20;
  const SampleMatrix x0 = random_points(15, 2, 14);
  EXPECT_TRUE(svgd_run(score, x0, cfg).final_state() == svgd_run(score, x0, cfg).final_state());
}

TEST(Ula, BrownianVariance) {
  const ScoreFn zero = [](const Matrix& x) { return Matrix(Matrix::Zero(x.rows(), x.cols())); };
  SamplerConfig cfg;
  cfg.step_size = 0.01;
  cfg.max_iters = 20;
  cfg.seed = 3;
  const SampleMatrix x0(Matrix::Zero(10000, 2));
  const Matrix x = ula_run(zero, x0, cfg).final_state().data();
  const double expected = 2.0 * 0.01 * 20;
  for (Index c = 0; c < 2; ++c) {
    const double var = x.col(c).array().square().mean();
    EXPECT_NEAR(var / expected, 1.0, 0.1);
  }
}

TEST(Ula, SameSeedSameTrajectory) {
  const ScoreFn score = [](const Matrix& x) { return Matrix(-x); };
  SamplerConfig cfg;
  cfg.max_iters = 50;
  cfg.seed = 99;
  const SampleMatrix x0 = random_points(20, 3, 15);
  EXPECT_TRUE(ula_run(score, x0, cfg).final_state() == ula_run(score, x0, cfg).final_state());
  SamplerConfig other = cfg;
  other.seed = 100;
  EXPECT_FALSE(ula_run(score, x0, cfg).final_state() == ula_run(score, x0, other).final_state());
}

TEST(Ula, RunsExactlyMaxIters) {
  const ScoreFn score = [](const Matrix& x) { return Matrix(-x); };
  SamplerConfig cfg;
  cfg.max_iters = 37;
  cfg.tol = 1e9;
  const Trajectory t = ula_run(score, random_points(5, 1, 16), cfg);
  EXPECT_EQ(t.iters_run, 37);
}

TEST(Ula, DivergenceIsReported) {
  const ScoreFn score = [](const Matrix& x) { return Matrix(1e3 * x); };
  SamplerConfig cfg;
  cfg.step_size = 10.0;
  cfg.max_iters = 1000;
  try {
    ula_run(score, random_points(5, 1, 17), cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.iteration(), 0);
    EXPECT_LT(e.iteration(), 1000);
  }
}

TEST(Samplers, TranslationEquivariance) {
  const SampleMatrix z = random_points(60, 2, 18);
  const Bandwidth eps = median_bandwidth(z);
  const SampleMatrix x0 = random_points(8, 2, 19);
  const Eigen::RowVector2d t(4.0, -3.0);
  const auto shift = [&](const SampleMatrix& s) {
    Matrix out = s.data();
    out.rowwise() += t;
    return SampleMatrix(out);
  };
  const DiffusionModel m = DiffusionModel::fit(z, eps);
  const DiffusionModel ms = DiffusionModel::fit(shift(z), eps);
  SamplerConfig cfg;
  cfg.max_iters = 10;
  cfg.tol = 0.0;
  cfg.seed = 5;

  const Matrix a = dmps_run(m, x0, cfg).final_state().data();
  const Matrix b = dmps_run(ms, shift(x0), cfg).final_state().data();
  EXPECT_LT(((b.rowwise() - t) - a).cwiseAbs().maxCoeff(), 1e-8);

  const Matrix c = svgd_run(learned_score(m), x0, cfg).final_state().data();
  const Matrix d = svgd_run(learned_score(ms), shift(x0), cfg).final_state().data();
  EXPECT_LT(((d.rowwise() - t) - c).cwiseAbs().maxCoeff(), 1e-8);

  const Matrix e = ula_run(learned_score(m), x0, cfg).final_state().data();
  const Matrix f = ula_run(learned_score(ms), shift(x0), cfg).final_state().data();
  EXPECT_LT(((f.rowwise() - t) - e).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Samplers, RotationEquivariance) {
  const SampleMatrix z = random_points(60, 3, 20);
  const Bandwidth eps = median_bandwidth(z);
  const SampleMatrix x0 = random_points(8, 3, 21);
  const Eigen::Matrix3d r =
      Eigen::AngleAxisd(1.1, Eigen::Vector3d(0.2, -1.0, 0.4).normalized()).toRotationMatrix();
  const auto rot = [&](const SampleMatrix& s) { return SampleMatrix(s.data() * r.transpose()); };
  const DiffusionModel m = DiffusionModel::fit(z, eps);
  const DiffusionModel mr = DiffusionModel::fit(rot(z), eps);
  SamplerConfig cfg;
  cfg.max_iters = 10;
  cfg.tol = 0.0;
  const Matrix a = dmps_run(m, x0, cfg).final_state().data();
  const Matrix b = dmps_run(mr, rot(x0), cfg).final_state().data();
  EXPECT_LT((b - a * r.transpose()).cwiseAbs().maxCoeff(), 1e-8);
  const Matrix c = svgd_run(learned_score(m), x0, cfg).final_state().data();
  const Matrix d = svgd_run(learned_score(mr), rot(x0), cfg).final_state().data();
  EXPECT_LT((d - c * r.transpose()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Trajectory, CsvLayout) {
  const DiffusionModel m = DiffusionModel::fit(random_points(20, 2, 22), Bandwidth(0.5));
  SamplerConfig cfg;
  cfg.max_iters = 4;
  cfg.tol = 0.0;
  cfg.snapshot_every = 2;
  const Trajectory t = dmps_run(m, random_points(3, 2, 23), cfg);
  const auto path = std::filesystem::temp_directory_path() / "dmps_traj.csv";
  write_trajectory_csv(path, t);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iter,particle_id,x_0,x_1");
  Index rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3 * static_cast<Index>(t.snapshots.size()));
  EXPECT_EQ(t.snapshots.size(), 3u);  // iterations 0, 2, 4
  std::filesystem::remove(path);
}
