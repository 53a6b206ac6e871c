#include "dmps/ot.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

using namespace dmps;
using dmps::testing::random_points;

namespace {

SampleMatrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return SampleMatrix(std::move(m));
}

double enumerate_assignments(const SampleMatrix& a, const SampleMatrix& b) {
  const Index n = a.count();
  const Matrix c = cost_matrix(a.data(), b.data(), CostKind::Euclidean);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += c(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

SampleMatrix permuted(const SampleMatrix& s, std::uint64_t seed) {
  std::vector<Index> p(static_cast<std::size_t>(s.count()));
  std::iota(p.begin(), p.end(), Index{0});
  Rng rng = make_rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  Matrix out(s.count(), s.dim());
  for (Index i = 0; i < s.count(); ++i) out.row(i) = s.data().row(p[static_cast<std::size_t>(i)]);
  return SampleMatrix(out);
}

}  // namespace

TEST(Sinkhorn, IdenticalSetsCostAlmostNothing) {
  const SampleMatrix a = random_points(50, 2, 1);
  OTConfig cfg;
  cfg.reg = 1e-2;
  const OTReport r = sinkhorn_distance(a, a, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.cost, 5.0 * cfg.reg);
  EXPECT_GE(r.cost, 0.0);
  EXPECT_LE(r.residual, cfg.marginal_tol);
}

TEST(Sinkhorn, SingletonsHaveForcedPlan) {
  for (double reg : {1e-3, 1e-1, 10.0}) {
    OTConfig cfg;
    cfg.reg = reg;
    EXPECT_NEAR(sinkhorn_distance(column({0.0}), column({1.0}), cfg).cost, 1.0, 1e-12);
  }
}

TEST(Sinkhorn, CloseToExactOnSmallInstances) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 9);
    const SampleMatrix a = random_points(n, 2, 10 + seed);
    const SampleMatrix b = random_points(n, 2, 20 + seed);
    OTConfig cfg;
    cfg.reg = 1e-2;
    EXPECT_NEAR(sinkhorn_distance(a, b, cfg).cost, exact_ot_small(a, b), 10.0 * cfg.reg);
  }
}

TEST(Sinkhorn, SymmetricInArguments) {
  const SampleMatrix a = random_points(30, 3, 2);
  const SampleMatrix b = random_points(45, 3, 3);
  OTConfig cfg;
  cfg.marginal_tol = 1e-14;
  cfg.max_iters = 100000;
  EXPECT_NEAR(sinkhorn_distance(a, b, cfg).cost, sinkhorn_distance(b, a, cfg).cost, 1e-10);
}

TEST(Sinkhorn, TranslationInvariant) {
  const SampleMatrix a = random_points(30, 2, 4);
  const SampleMatrix b = random_points(25, 2, 5);
  const Eigen::RowVector2d t(10.0, -7.0);
  Matrix as = a.data();
  Matrix bs = b.data();
  as.rowwise() += t;
  bs.rowwise() += t;
  OTConfig cfg;
  cfg.marginal_tol = 1e-14;
  cfg.max_iters = 100000;
  EXPECT_NEAR(sinkhorn_distance(a, b, cfg).cost,
              sinkhorn_distance(SampleMatrix(as), SampleMatrix(bs), cfg).cost, 1e-10);
}

TEST(Sinkhorn, ApproachesExactAsRegShrinks) {
  const SampleMatrix a = random_points(8, 2, 6);
  const SampleMatrix b = random_points(8, 2, 7);
  const double exact = exact_ot_small(a, b);
  double previous = std::numeric_limits<double>::infinity();
  for (double reg : {1.0, 0.3, 0.1, 0.03, 0.01, 0.003}) {
    OTConfig cfg;
    cfg.reg = reg;
    cfg.marginal_tol = 1e-12;
    cfg.max_iters = 200000;
    const double cost = sinkhorn_distance(a, b, cfg).cost;
    EXPECT_LE(cost, previous + 1e-9) << "reg " << reg;
    EXPECT_GE(cost, exact - 1e-9);
    previous = cost;
  }
  EXPECT_NEAR(previous, exact, 1e-2);
}

TEST(Sinkhorn, TinyRegOnWideDataStaysFinite) {
  const SampleMatrix a = random_points(40, 2, 8, 300.0);
  const SampleMatrix b = random_points(40, 2, 9, 300.0);
  OTConfig cfg;
  cfg.reg = 1e-4;
  cfg.max_iters = 2000;
  const OTReport r = sinkhorn_distance(a, b, cfg);
  EXPECT_TRUE(std::isfinite(r.cost));
  EXPECT_TRUE(std::isfinite(r.residual));
  // An unconverged plan is infeasible, so only a converged one is bounded by
  // the exact cost.
  if (r.converged) {
    EXPECT_GE(r.cost, exact_ot_small(a, b) - 1e-6);
  } else {
    EXPECT_GT(r.residual, cfg.marginal_tol);
  }
}

TEST(Sinkhorn, SquaredCostMode) {
  OTConfig cfg;
  cfg.cost = CostKind::SqEuclidean;
  EXPECT_NEAR(sinkhorn_distance(column({0.0}), column({3.0}), cfg).cost, 9.0, 1e-12);
}

TEST(Sinkhorn, InputErrors) {
  OTConfig cfg;
  cfg.reg = 0.0;
  EXPECT_THROW(sinkhorn_distance(column({0.0}), column({1.0}), cfg), InvalidInputError);
  EXPECT_THROW(sinkhorn_distance(random_points(3, 2, 1), random_points(3, 3, 1)), InvalidInputError);
}

TEST(Sinkhorn, ReportsNonConvergence) {
  OTConfig cfg;
  cfg.max_iters = 2;
  cfg.marginal_tol = 1e-15;
  cfg.reg = 1e-3;
  const OTReport r = sinkhorn_distance(random_points(30, 2, 1), random_points(30, 2, 2), cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iters, 2);
}

TEST(OTReport, JsonRecord) {
  OTReport r;
  r.cost = 0.5;
  r.iters = 12;
  r.residual = 1e-7;
  r.converged = true;
  r.reg = 0.01;
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_DOUBLE_EQ(j["cost"].get<double>(), 0.5);
  EXPECT_EQ(j["iters"].get<int>(), 12);
  EXPECT_DOUBLE_EQ(j["reg"].get<double>(), 0.01);
  EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(ExactOT, Examples) {
  const SampleMatrix a = random_points(6, 2, 1);
  EXPECT_NEAR(exact_ot_small(a, a), 0.0, 1e-15);
  EXPECT_NEAR(exact_ot_small(column({0.0, 1.0}), column({1.0, 2.0})), 1.0, 1e-15);
}

TEST(ExactOT, MatchesEnumeration) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 7);
    const SampleMatrix a = random_points(n, 3, 100 + seed);
    const SampleMatrix b = random_points(n, 3, 200 + seed);
    EXPECT_NEAR(exact_ot_small(a, b), enumerate_assignments(a, b), 1e-12);
  }
}

TEST(ExactOT, RelabelingInvariant) {
  const SampleMatrix a = random_points(12, 2, 3);
  const SampleMatrix b = random_points(12, 2, 4);
  EXPECT_NEAR(exact_ot_small(a, b), exact_ot_small(permuted(a, 1), permuted(b, 2)), 1e-12);
}

TEST(ExactOT, Errors) {
  EXPECT_THROW(exact_ot_small(random_points(3, 2, 1), random_points(4, 2, 1)), InvalidInputError);
  EXPECT_THROW(exact_ot_small(random_points(65, 2, 1), random_points(65, 2, 2)), InvalidInputError);
}

TEST(CostKind, Parse) {
  EXPECT_EQ(parse_cost_kind("euclidean"), CostKind::Euclidean);
  EXPECT_EQ(parse_cost_kind("sqeuclidean"), CostKind::SqEuclidean);
  EXPECT_THROW(parse_cost_kind("manhattan"), InvalidInputError);
}
