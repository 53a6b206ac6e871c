#pragma once

#include "dmps/types.hpp"

#include <filesystem>

namespace dmps {

/// CSV with header x_0..x_{d-1}; values written with round-trip precision.
void write_samples_csv(const std::filesystem::path& path, const Matrix& samples);
SampleMatrix read_samples_csv(const std::filesystem::path& path);

}  // namespace dmps
