#include "dmps/sample_io.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace dmps {
namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void write_samples_csv(const std::filesystem::path& path, const Matrix& samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open sample file for writing: " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Index c = 0; c < samples.cols(); ++c) out << (c ? "," : "") << "x_" << c;
  out << '\n';
  for (Index i = 0; i < samples.rows(); ++i) {
    for (Index c = 0; c < samples.cols(); ++c) out << (c ? "," : "") << samples(i, c);
    out << '\n';
  }
  if (!out) throw IoError("failed writing sample file: " + path.string());
}

SampleMatrix read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sample file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("sample file is empty: " + path.string());
  const auto header = split(trim(line));
  const auto d = static_cast<Index>(header.size());
  for (Index c = 0; c < d; ++c) {
    if (trim(header[static_cast<std::size_t>(c)]) != "x_" + std::to_string(c)) {
      throw IoError("sample file header must read x_0..x_{d-1}: " + path.string());
    }
  }
  std::vector<double> values;
  Index rows = 0;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line));
    if (static_cast<Index>(fields.size()) != d) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": expected " << d << " fields, got " << fields.size();
      throw IoError(os.str());
    }
    for (auto f : fields) {
      f = trim(f);
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
        std::ostringstream os;
        os << path.string() << ":" << line_no << ": cannot parse '" << f << "'";
        throw IoError(os.str());
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw IoError("sample file has no rows: " + path.string());
  Matrix m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, d);
  return SampleMatrix(std::move(m));
}

}  // namespace dmps
