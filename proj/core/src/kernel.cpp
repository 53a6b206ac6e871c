#include "dmps/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmps {
namespace {

Matrix squared_distances(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows(), y.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < y.rows(); ++j) {
      out(i, j) = (x.row(i) - y.row(j)).squaredNorm();
    }
  }
  return out;
}

Matrix kernel_from_sq(const Matrix& sq, double eps) {
  return (-sq.array() / (2.0 * eps)).exp().matrix();
}

CoordinateSlices grad1_from_kernel(const Matrix& x, const Matrix& y, const Matrix& k,
                                   double eps) {
  CoordinateSlices out(static_cast<std::size_t>(x.cols()), Matrix(x.rows(), y.rows()));
  for (Index c = 0; c < x.cols(); ++c) {
    Matrix& slice = out[static_cast<std::size_t>(c)];
    for (Index j = 0; j < y.rows(); ++j) {
      for (Index i = 0; i < x.rows(); ++i) {
        slice(i, j) = -((x(i, c) - y(j, c)) / eps) * k(i, j);
      }
    }
  }
  return out;
}

// Quantities shared by the bundle and its gradients.
struct BundleContext {
  Matrix k_xz;          // K(x_i, z_k)
  Vector sqrt_d_train;  // sqrt(d(z_k))
  Vector row_m;         // sum_k M(x_i, z_k)
  Vector col_m;         // sum_k M(z_k, y_j)
};

BundleContext make_context(const Matrix& x, const Matrix& y, const Matrix& z, double eps,
                           const Vector& d_row, const Vector& d_col) {
  BundleContext ctx;
  ctx.k_xz = kernel_from_sq(squared_distances(x, z), eps);
  const Matrix k_zy = kernel_from_sq(squared_distances(z, y), eps);
  ctx.sqrt_d_train = kernel_from_sq(squared_distances(z, z), eps).rowwise().sum().cwiseSqrt();

  const Vector inv_sqrt_train = ctx.sqrt_d_train.cwiseInverse();
  ctx.row_m = (ctx.k_xz * inv_sqrt_train).cwiseQuotient(d_row.cwiseSqrt());
  ctx.col_m = (k_zy.transpose() * inv_sqrt_train).cwiseQuotient(d_col.cwiseSqrt());
  return ctx;
}

}  // namespace

Bandwidth median_bandwidth(const Matrix& points) {
  const Index n = points.rows();
  if (n < 2) {
    throw InvalidInputError("median bandwidth needs at least two points");
  }
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      dist.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double med = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0)) {
    throw DegenerateDataError("median pairwise distance is zero (duplicated points)");
  }
  return Bandwidth(med * med / (2.0 * std::log(static_cast<double>(n))));
}

Bandwidth median_bandwidth(const SampleMatrix& train) { return median_bandwidth(train.data()); }

Matrix gaussian_kernel(const SampleMatrix& x, const SampleMatrix& y, Bandwidth eps) {
  require_same_dim(x, y, "gaussian_kernel");
  return kernel_from_sq(squared_distances(x.data(), y.data()), eps.value());
}

CoordinateSlices gaussian_kernel_grad1(const SampleMatrix& x, const SampleMatrix& y,
                                       Bandwidth eps) {
  require_same_dim(x, y, "gaussian_kernel_grad1");
  const Matrix k = gaussian_kernel(x, y, eps);
  return grad1_from_kernel(x.data(), y.data(), k, eps.value());
}

KernelBundle build_kernel_bundle(const SampleMatrix& x, const SampleMatrix& y,
                                 const SampleMatrix& train, Bandwidth eps) {
  require_same_dim(x, y, "build_kernel_bundle");
  require_same_dim(x, train, "build_kernel_bundle");
  const double e = eps.value();

  KernelBundle b;
  b.K = kernel_from_sq(squared_distances(x.data(), y.data()), e);
  b.d_row = kernel_from_sq(squared_distances(x.data(), train.data()), e).rowwise().sum();
  b.d_col = kernel_from_sq(squared_distances(train.data(), y.data()), e).colwise().sum().transpose();

  const BundleContext ctx = make_context(x.data(), y.data(), train.data(), e, b.d_row, b.d_col);

  const Vector inv_sqrt_row = b.d_row.cwiseSqrt().cwiseInverse();
  const Vector inv_sqrt_col = b.d_col.cwiseSqrt().cwiseInverse();
  b.M = inv_sqrt_row.asDiagonal() * b.K * inv_sqrt_col.asDiagonal();
  b.Pf = b.M * ctx.col_m.cwiseInverse().asDiagonal();
  b.Pb = ctx.row_m.cwiseInverse().asDiagonal() * b.M;
  b.P = 0.5 * (b.Pf + b.Pb);
  return b;
}

KernelGradientBundle build_kernel_gradients(const SampleMatrix& x, const SampleMatrix& y,
                                            const SampleMatrix& train, Bandwidth eps,
                                            const KernelBundle& bundle) {
  require_same_dim(x, y, "build_kernel_gradients");
  require_same_dim(x, train, "build_kernel_gradients");
  if (bundle.K.rows() != x.count() || bundle.K.cols() != y.count()) {
    throw InvalidInputError("build_kernel_gradients: bundle shape does not match inputs");
  }
  const double e = eps.value();
  const Index n = x.count();
  const Index m = y.count();
  const Index d = x.dim();
  const BundleContext ctx =
      make_context(x.data(), y.data(), train.data(), e, bundle.d_row, bundle.d_col);

  KernelGradientBundle g;
  g.gradK = grad1_from_kernel(x.data(), y.data(), bundle.K, e);
  const CoordinateSlices grad_k_xz = grad1_from_kernel(x.data(), train.data(), ctx.k_xz, e);

  const Vector sqrt_row = bundle.d_row.cwiseSqrt();
  const Vector sqrt_col = bundle.d_col.cwiseSqrt();
  const Vector inv_sqrt_train = ctx.sqrt_d_train.cwiseInverse();

  g.gradM.resize(static_cast<std::size_t>(d));
  g.gradPf.resize(static_cast<std::size_t>(d));
  g.gradPb.resize(static_cast<std::size_t>(d));
  g.gradP.resize(static_cast<std::size_t>(d));

  for (Index c = 0; c < d; ++c) {
    const auto cs = static_cast<std::size_t>(c);
    // grad sqrt(d(x)) = grad d(x) / (2 sqrt(d(x)))
    const Vector grad_d_row = grad_k_xz[cs].rowwise().sum();
    const Vector grad_sqrt_row = grad_d_row.cwiseQuotient(2.0 * sqrt_row);

    Matrix& gm = g.gradM[cs];
    gm.resize(n, m);
    for (Index j = 0; j < m; ++j) {
      for (Index i = 0; i < n; ++i) {
        gm(i, j) = g.gradK[cs](i, j) / (sqrt_col(j) * sqrt_row(i)) -
                   grad_sqrt_row(i) * sqrt_col(j) * bundle.K(i, j) /
                       (bundle.d_row(i) * bundle.d_col(j));
      }
    }

    g.gradPf[cs] = gm * ctx.col_m.cwiseInverse().asDiagonal();

    // Row sum of M(x, z_k) over the training set and its gradient.
    Vector grad_row_m(n);
    for (Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Index k = 0; k < train.count(); ++k) {
        acc += grad_k_xz[cs](i, k) * inv_sqrt_train(k) / sqrt_row(i) -
               ctx.k_xz(i, k) * inv_sqrt_train(k) * grad_sqrt_row(i) / bundle.d_row(i);
      }
      grad_row_m(i) = acc;
    }

    Matrix& gpb = g.gradPb[cs];
    gpb.resize(n, m);
    for (Index j = 0; j < m; ++j) {
      for (Index i = 0; i < n; ++i) {
        const double r = ctx.row_m(i);
        gpb(i, j) = (gm(i, j) * r - grad_row_m(i) * bundle.M(i, j)) / (r * r);
      }
    }
    g.gradP[cs] = 0.5 * (g.gradPf[cs] + gpb);
  }
  return g;
}

TrainingKernel::TrainingKernel(SampleMatrix train, Bandwidth eps)
    : train_(std::move(train)), eps_(eps) {
  const Matrix& z = train_.data();
  const Matrix k = kernel_from_sq(squared_distances(z, z), eps_.value());
  sqrt_degree_ = k.rowwise().sum().cwiseSqrt();
  const Vector inv = sqrt_degree_.cwiseInverse();
  const Matrix m = inv.asDiagonal() * k * inv.asDiagonal();
  m_colsum_ = m.colwise().sum().transpose();
  const Vector row_sum = m.rowwise().sum();
  p_train_ = 0.5 * (m * m_colsum_.cwiseInverse().asDiagonal() +
                    row_sum.cwiseInverse().asDiagonal() * m);
}

QueryRows TrainingKernel::rows(const Matrix& queries, bool with_gradient) const {
  if (queries.cols() != dim()) {
    std::ostringstream os;
    os << "query dimension " << queries.cols() << " does not match training dimension " << dim();
    throw InvalidInputError(os.str());
  }
  const Matrix& z = train_.data();
  const Index nq = queries.rows();
  const Index n = size();
  const Index d = dim();
  const double e = eps_.value();

  QueryRows out;
  out.P.resize(nq, n);
  out.Pb.resize(nq, n);
  if (with_gradient) {
    out.gradP.assign(static_cast<std::size_t>(d), Matrix(nq, n));
  }

#pragma omp parallel
  {
    Vector r2(n);
    Vector kt(n);
    Vector mt(n);
    Matrix gkt(n, d);
    Matrix gmt(n, d);

#pragma omp for schedule(static)
    for (Index q = 0; q < nq; ++q) {
      const auto x = queries.row(q);
      for (Index k = 0; k < n; ++k) r2(k) = (x - z.row(k)).squaredNorm();
      const double shift = r2.minCoeff();
      // The factor exp(-shift / 4 eps) is exact and only affects P^f.
      kt = (-(r2.array() - shift) / (2.0 * e)).exp().matrix();
      const double scale = std::exp(-shift / (4.0 * e));
      const double dt = kt.sum();
      const double sdt = std::sqrt(dt);
      mt = kt.cwiseQuotient(sdt * sqrt_degree_);
      const double s = mt.sum();
      for (Index k = 0; k < n; ++k) {
        const double pb = mt(k) / s;
        const double pf = scale * mt(k) / m_colsum_(k);
        out.Pb(q, k) = pb;
        out.P(q, k) = 0.5 * (pf + pb);
      }
      if (!with_gradient) continue;

      for (Index k = 0; k < n; ++k) {
        gkt.row(k) = -(x - z.row(k)) * (kt(k) / e);
      }
      const Eigen::RowVectorXd gdt = gkt.colwise().sum();
      for (Index k = 0; k < n; ++k) {
        gmt.row(k) = (gkt.row(k) - gdt * (kt(k) / (2.0 * dt))) / (sdt * sqrt_degree_(k));
      }
      const Eigen::RowVectorXd gs = gmt.colwise().sum();
      for (Index c = 0; c < d; ++c) {
        Matrix& slice = out.gradP[static_cast<std::size_t>(c)];
        for (Index k = 0; k < n; ++k) {
          const double gpb = gmt(k, c) / s - gs(c) * mt(k) / (s * s);
          const double gpf = scale * gmt(k, c) / m_colsum_(k);
          slice(q, k) = 0.5 * (gpf + gpb);
        }
      }
    }
  }
  return out;
}

Matrix TrainingKernel::backward_rows(const Matrix& queries) const {
  if (queries.cols() != dim()) {
    std::ostringstream os;
    os << "query dimension " << queries.cols() << " does not match training dimension " << dim();
    throw InvalidInputError(os.str());
  }
  // Work column-wise on the transpose so each query is contiguous.
  const Matrix& z = train_.data();
  Matrix r2 = -2.0 * z * queries.transpose();
  r2.colwise() += z.rowwise().squaredNorm();
  r2.rowwise() += queries.rowwise().squaredNorm().transpose();
  const double e = eps_.value();
  const Vector inv_sd = sqrt_degree_.cwiseInverse();
  for (Index q = 0; q < r2.cols(); ++q) {
    auto col = r2.col(q);
    const double shift = col.minCoeff();
    col = (-(col.array() - shift) / (2.0 * e)).exp().matrix().cwiseProduct(inv_sd);
    col /= col.sum();
  }
  return r2.transpose();
}

}  // namespace dmps
