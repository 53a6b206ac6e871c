#include "dmps/spectral.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

// Binary layout (little-endian):
//   char[8]  magic "DMPSMDL\0"
//   u32      format version
//   i64      n, d
//   f64      eps, sigma_min, lambda_min
//   f64[n*d] training samples, row-major
//   f64[n]   eigenvalues (descending)
//   f64[n*n] eigenvectors, column-major
//   i64      number of kept modes, then i64[kept] indices
//   f64[n]   inverse-spectrum weights
//   f64[n*n] middle factor, column-major

namespace dmps {
namespace {

constexpr std::array<char, 8> kMagic = {'D', 'M', 'P', 'S', 'M', 'D', 'L', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open model file for writing: " + path.string());
  }
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void doubles(const double* p, Index count) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * 8));
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw IoError("failed writing model file: " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open model file: " + path.string());
  }
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  void doubles(double* p, Index count) {
    in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * 8));
    check();
  }

 private:
  void check() {
    if (!in_) throw IoError("truncated or corrupt model file: " + path_.string());
  }
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

void save_model(const DiffusionModel& model, const std::filesystem::path& path) {
  Writer w(path);
  const Index n = model.train().count();
  const Index d = model.train().dim();
  for (char c : kMagic) w.pod(c);
  w.pod(kFormatVersion);
  w.pod(static_cast<std::int64_t>(n));
  w.pod(static_cast<std::int64_t>(d));
  w.pod(model.bandwidth().value());
  w.pod(model.truncation().sigma_min);
  w.pod(model.truncation().lambda_min);

  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows =
      model.train().data();
  w.doubles(rows.data(), n * d);
  w.doubles(model.spectrum().lambdas.data(), n);
  w.doubles(model.spectrum().phis.data(), n * n);
  w.pod(static_cast<std::int64_t>(model.inverse().kept.size()));
  for (Index k : model.inverse().kept) w.pod(static_cast<std::int64_t>(k));
  w.doubles(model.inverse().weights.data(), n);
  w.doubles(model.middle_factor().data(), n * n);
  w.finish(path);
}

DiffusionModel load_model(const std::filesystem::path& path) {
  Reader r(path);
  std::array<char, 8> magic{};
  for (char& c : magic) c = r.pod<char>();
  if (magic != kMagic) throw IoError("not a model file (bad magic): " + path.string());
  const auto version = r.pod<std::uint32_t>();
  if (version != kFormatVersion) {
    throw IoError("unsupported model format version " + std::to_string(version));
  }
  const auto n = static_cast<Index>(r.pod<std::int64_t>());
  const auto d = static_cast<Index>(r.pod<std::int64_t>());
  if (n < 1 || d < 1 || n > 1'000'000 || d > 100'000) {
    throw IoError("model file has implausible shape");
  }
  const double eps = r.pod<double>();
  TruncationOptions opts;
  opts.sigma_min = r.pod<double>();
  opts.lambda_min = r.pod<double>();

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(n, d);
  r.doubles(rows.data(), n * d);
  Spectrum spec{Vector(n), Matrix(n, n), Bandwidth(eps)};
  r.doubles(spec.lambdas.data(), n);
  r.doubles(spec.phis.data(), n * n);

  const auto kept = r.pod<std::int64_t>();
  if (kept < 1 || kept > n) throw IoError("model file has invalid kept-mode count");
  InverseSpectrum inv{Vector(n), {}};
  inv.kept.reserve(static_cast<std::size_t>(kept));
  for (std::int64_t k = 0; k < kept; ++k) {
    const auto idx = r.pod<std::int64_t>();
    if (idx < 0 || idx >= n) throw IoError("model file has out-of-range mode index");
    inv.kept.push_back(static_cast<Index>(idx));
  }
  r.doubles(inv.weights.data(), n);
  Matrix middle(n, n);
  r.doubles(middle.data(), n * n);

  return DiffusionModel(SampleMatrix(Matrix(rows)), std::move(spec), std::move(inv),
                        std::move(middle), opts);
}

}  // namespace dmps
