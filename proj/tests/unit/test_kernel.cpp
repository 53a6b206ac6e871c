#include "dmps/kernel.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dmps;
using dmps::testing::fd_row_derivative;
using dmps::testing::random_points;
using dmps::testing::rel_error;

namespace {

SampleMatrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return SampleMatrix(std::move(m));
}

}  // namespace

TEST(MedianBandwidth, TwoPoints) {
  EXPECT_NEAR(median_bandwidth(column({0.0, 1.0})).value(), 0.7213475204444817, 1e-15);
}

TEST(MedianBandwidth, ThreeCollinear) {
  EXPECT_NEAR(median_bandwidth(column({0.0, 1.0, 2.0})).value(), 0.45511961331341866, 1e-15);
}

TEST(MedianBandwidth, EvenCountAveragesMiddles) {
  // distances {1, 2, 3, 1, 2, 1}: sorted 1 1 1 2 2 3, median 1.5
  const double e = median_bandwidth(column({0.0, 1.0, 2.0, 3.0})).value();
  EXPECT_NEAR(e, 2.25 / (2.0 * std::log(4.0)), 1e-15);
}

TEST(MedianBandwidth, Errors) {
  EXPECT_THROW(median_bandwidth(column({1.0})), InvalidInputError);
  EXPECT_THROW(median_bandwidth(column({2.0, 2.0, 2.0})), DegenerateDataError);
}

TEST(GaussianKernel, Values) {
  const Bandwidth eps(0.5);
  const SampleMatrix x = column({0.0});
  EXPECT_DOUBLE_EQ(gaussian_kernel(x, x, eps)(0, 0), 1.0);
  // |x - y|^2 = 2 eps
  const SampleMatrix y = column({1.0});
  EXPECT_NEAR(gaussian_kernel(x, y, eps)(0, 0), std::exp(-1.0), 1e-15);
}

TEST(GaussianKernel, SwapTransposes) {
  const SampleMatrix a = random_points(5, 3, 1);
  const SampleMatrix b = random_points(7, 3, 2);
  const Bandwidth eps(0.8);
  EXPECT_TRUE(gaussian_kernel(a, b, eps).isApprox(gaussian_kernel(b, a, eps).transpose(), 1e-15));
}

TEST(GaussianKernel, DimensionMismatch) {
  EXPECT_THROW(gaussian_kernel(random_points(3, 2, 1), random_points(3, 3, 1), Bandwidth(1.0)),
               InvalidInputError);
  EXPECT_THROW(gaussian_kernel_grad1(random_points(3, 2, 1), random_points(3, 3, 1), Bandwidth(1.0)),
               InvalidInputError);
}

TEST(GaussianKernel, ShrinkingBandwidthDecreasesOffDiagonal) {
  const SampleMatrix x = random_points(12, 2, 3);
  const Matrix k1 = gaussian_kernel(x, x, Bandwidth(1.0));
  const Matrix k2 = gaussian_kernel(x, x, Bandwidth(0.1));
  for (Index i = 0; i < 12; ++i) {
    for (Index j = 0; j < 12; ++j) {
      if (i != j) EXPECT_LT(k2(i, j), k1(i, j));
    }
  }
}

TEST(GaussianKernelGrad, OneDimensionalValue) {
  const auto g = gaussian_kernel_grad1(column({1.0}), column({0.0}), Bandwidth(1.0));
  EXPECT_NEAR(g[0](0, 0), -0.6065306597126334, 1e-15);
}

TEST(GaussianKernelGrad, ZeroAtCoincidentPoints) {
  const SampleMatrix x = random_points(4, 3, 5);
  const auto g = gaussian_kernel_grad1(x, x, Bandwidth(0.7));
  for (const auto& slice : g) EXPECT_DOUBLE_EQ(slice.diagonal().cwiseAbs().maxCoeff(), 0.0);
}

TEST(GaussianKernelGrad, MatchesFiniteDifferences) {
  const SampleMatrix x = random_points(6, 3, 7);
  const SampleMatrix y = random_points(5, 3, 8);
  const Bandwidth eps = median_bandwidth(x);
  const auto g = gaussian_kernel_grad1(x, y, eps);
  const double h = 1e-5 * std::sqrt(eps.value());
  for (Index c = 0; c < 3; ++c) {
    const Matrix fd = fd_row_derivative(
        [&](const SampleMatrix& xx) { return gaussian_kernel(xx, y, eps); }, x, c, h);
    EXPECT_LT(rel_error(g[static_cast<std::size_t>(c)], fd), 1e-6);
  }
}

TEST(KernelBundle, SingleTrainingPoint) {
  const SampleMatrix z = column({0.3});
  const KernelBundle b = build_kernel_bundle(z, z, z, Bandwidth(1.0));
  EXPECT_NEAR(b.P(0, 0), 1.0, 1e-15);
  const KernelGradientBundle g = build_kernel_gradients(z, z, z, Bandwidth(1.0), b);
  EXPECT_NEAR(g.gradP[0](0, 0), 0.0, 1e-15);
  EXPECT_NEAR(g.gradPb[0](0, 0), 0.0, 1e-15);
  EXPECT_NEAR(g.gradPf[0](0, 0), 0.0, 1e-15);
  EXPECT_NEAR(g.gradM[0](0, 0), 0.0, 1e-15);
}

TEST(KernelBundle, TrainingNormalizations) {
  const SampleMatrix z = random_points(40, 3, 11);
  const Bandwidth eps = median_bandwidth(z);
  const KernelBundle b = build_kernel_bundle(z, z, z, eps);
  EXPECT_LT((b.Pf.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_LT((b.Pb.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_LT((b.Pf - b.Pb.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((b.P - b.P.transpose()).cwiseAbs().maxCoeff(), 1e-12 * b.P.cwiseAbs().maxCoeff());
  EXPECT_GT(b.K.minCoeff(), 0.0);
  EXPECT_LE(b.K.maxCoeff(), 1.0);
  for (const Matrix* m : {&b.M, &b.Pf, &b.Pb, &b.P}) {
    EXPECT_GE(m->minCoeff(), 0.0);
    EXPECT_TRUE(m->allFinite());
  }
}

TEST(KernelBundle, QueriesNormalizeAgainstTraining) {
  const SampleMatrix z = random_points(30, 2, 12);
  const SampleMatrix x = random_points(6, 2, 13, 2.0);
  const Bandwidth eps = median_bandwidth(z);
  const KernelBundle b = build_kernel_bundle(x, z, z, eps);
  // Rows of P^b over the training columns still sum to one.
  EXPECT_LT((b.Pb.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_GE(b.P.minCoeff(), 0.0);
}

TEST(KernelGradients, MatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SampleMatrix z = random_points(12, 3, 100 + seed);
    const SampleMatrix x = random_points(5, 3, 200 + seed);
    const SampleMatrix y = random_points(4, 3, 300 + seed);
    const Bandwidth eps = median_bandwidth(z);
    const KernelBundle b = build_kernel_bundle(x, y, z, eps);
    const KernelGradientBundle g = build_kernel_gradients(x, y, z, eps, b);
    const double h = 1e-5 * std::sqrt(eps.value());
    const auto field = [&](auto member) {
      return [&, member](const SampleMatrix& xx) { return build_kernel_bundle(xx, y, z, eps).*member; };
    };
    for (Index c = 0; c < 3; ++c) {
      const auto cs = static_cast<std::size_t>(c);
      EXPECT_LT(rel_error(g.gradK[cs], fd_row_derivative(field(&KernelBundle::K), x, c, h)), 1e-5);
      EXPECT_LT(rel_error(g.gradM[cs], fd_row_derivative(field(&KernelBundle::M), x, c, h)), 1e-5);
      EXPECT_LT(rel_error(g.gradPf[cs], fd_row_derivative(field(&KernelBundle::Pf), x, c, h)), 1e-5);
      EXPECT_LT(rel_error(g.gradPb[cs], fd_row_derivative(field(&KernelBundle::Pb), x, c, h)), 1e-5);
      EXPECT_LT(rel_error(g.gradP[cs], fd_row_derivative(field(&KernelBundle::P), x, c, h)), 1e-5);
    }
  }
}

TEST(KernelGradients, ReflectionPair) {
  const SampleMatrix z = column({-0.7, 0.7});
  const SampleMatrix q = column({0.0});
  const Bandwidth eps(0.4);
  const KernelBundle b = build_kernel_bundle(q, z, z, eps);
  const KernelGradientBundle g = build_kernel_gradients(q, z, z, eps, b);
  EXPECT_NEAR(g.gradP[0](0, 0), -g.gradP[0](0, 1), 1e-15);
  EXPECT_GT(std::abs(g.gradP[0](0, 0)), 0.0);
}

TEST(KernelGradients, AllSlicesFinite) {
  const SampleMatrix z = random_points(15, 4, 21);
  const SampleMatrix x = random_points(6, 4, 22, 3.0);
  const Bandwidth eps = median_bandwidth(z);
  const KernelBundle b = build_kernel_bundle(x, z, z, eps);
  const KernelGradientBundle g = build_kernel_gradients(x, z, z, eps, b);
  for (const auto* set : {&g.gradK, &g.gradM, &g.gradPf, &g.gradPb, &g.gradP}) {
    for (const auto& s : *set) EXPECT_TRUE(s.allFinite());
  }
}

TEST(TrainingKernel, RowsMatchBundle) {
  const SampleMatrix z = random_points(25, 3, 31);
  const SampleMatrix x = random_points(7, 3, 32, 1.5);
  const Bandwidth eps = median_bandwidth(z);
  const TrainingKernel tk(z, eps);
  const QueryRows rows = tk.rows(x.data(), true);
  const KernelBundle b = build_kernel_bundle(x, z, z, eps);
  const KernelGradientBundle g = build_kernel_gradients(x, z, z, eps, b);
  EXPECT_LT(rel_error(rows.P, b.P), 1e-12);
  EXPECT_LT(rel_error(rows.Pb, b.Pb), 1e-12);
  EXPECT_LT(rel_error(tk.backward_rows(x.data()), b.Pb), 1e-12);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LT(rel_error(rows.gradP[c], g.gradP[c]), 1e-11);
  const KernelBundle zz = build_kernel_bundle(z, z, z, eps);
  EXPECT_LT(rel_error(tk.train_P(), zz.P), 1e-12);
}

TEST(TrainingKernel, FarQueriesStayFinite) {
  const SampleMatrix z = random_points(20, 2, 41);
  const Bandwidth eps(0.05);
  const TrainingKernel tk(z, eps);
  Matrix far(1, 2);
  far << 60.0, -45.0;
  const QueryRows rows = tk.rows(far, true);
  EXPECT_TRUE(rows.P.allFinite());
  EXPECT_TRUE(rows.Pb.allFinite());
  for (const auto& s : rows.gradP) EXPECT_TRUE(s.allFinite());
  EXPECT_NEAR(rows.Pb.sum(), 1.0, 1e-12);
}

TEST(TrainingKernel, DimensionMismatch) {
  const TrainingKernel tk(random_points(5, 2, 1), Bandwidth(1.0));
  EXPECT_THROW(tk.rows(Matrix::Zero(2, 3), false), InvalidInputError);
  EXPECT_THROW(tk.backward_rows(Matrix::Zero(2, 3)), InvalidInputError);
}
