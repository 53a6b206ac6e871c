#include "dmps/types.hpp"

#include <cmath>
#include <sstream>

namespace dmps {

SampleMatrix::SampleMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    std::ostringstream os;
    os << "sample matrix must have at least one row and one column, got "
       << data_.rows() << "x" << data_.cols();
    throw InvalidInputError(os.str());
  }
  if (!data_.allFinite()) {
    throw InvalidInputError("sample matrix contains NaN or Inf entries");
  }
}

Bandwidth::Bandwidth(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    std::ostringstream os;
    os << "bandwidth must be positive and finite, got " << epsilon;
    throw InvalidInputError(os.str());
  }
}

void require_same_dim(const SampleMatrix& a, const SampleMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw InvalidInputError(os.str());
  }
}

}  // namespace dmps
