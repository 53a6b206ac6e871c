#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dmps {

using Rng = std::mt19937_64;

/// Child seed for a named branch of the seed tree. Stable across platforms:
/// the tag is hashed with FNV-1a and everything is mixed through seed_seq.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace dmps
