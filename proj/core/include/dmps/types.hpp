#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmps {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// One n-by-m matrix per ambient coordinate: slices[c](i, j) is the c-th
/// component of a vector-valued kernel evaluated at (x_i, y_j).
using CoordinateSlices = std::vector<Matrix>;

enum class ErrorKind {
  InvalidInput,
  DegenerateData,
  DegenerateSpectrum,
  Divergence,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures caused by the numerics rather than by the caller.
  bool is_numerical() const noexcept {
    return kind_ == ErrorKind::DegenerateData ||
           kind_ == ErrorKind::DegenerateSpectrum ||
           kind_ == ErrorKind::Divergence;
  }

 private:
  ErrorKind kind_;
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what)
      : Error(ErrorKind::InvalidInput, what) {}
};

class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what)
      : Error(ErrorKind::DegenerateData, what) {}
};

class DegenerateSpectrumError : public Error {
 public:
  explicit DegenerateSpectrumError(const std::string& what)
      : Error(ErrorKind::DegenerateSpectrum, what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(int iteration, const std::string& what)
      : Error(ErrorKind::Divergence, what), iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Points in ambient space, one per row. Always non-empty and finite.
class SampleMatrix {
 public:
  explicit SampleMatrix(Matrix data);

  Index count() const noexcept { return data_.rows(); }
  Index dim() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }
  auto row(Index i) const { return data_.row(i); }

  friend bool operator==(const SampleMatrix& a, const SampleMatrix& b) {
    return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
           a.data_ == b.data_;
  }

 private:
  Matrix data_;
};

/// Gaussian kernel bandwidth, in squared ambient length units.
class Bandwidth {
 public:
  explicit Bandwidth(double epsilon);

  double value() const noexcept { return epsilon_; }

 private:
  double epsilon_;
};

void require_same_dim(const SampleMatrix& a, const SampleMatrix& b, const char* what);

}  // namespace dmps
