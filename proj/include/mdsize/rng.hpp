#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mdsize {

using Rng = std::mt19937_64;

/// Stage tags keep streams for different pipeline stages disjoint even when
/// every other index in the key tuple coincides.
enum class Stage : std::uint64_t {
  Calibration = 0x11,
  TargetPopulation = 0x21,
  Development = 0x22,
  AmputeDevelopment = 0x31,
  AmputeTarget = 0x32,
  Imputation = 0x41,
  ApplyTarget = 0x42,
  CrossValidation = 0x51,
  Sizing = 0x61,
};

/// 64-bit avalanche finalizer (splitmix64).
std::uint64_t mix64(std::uint64_t x);

/// Order-sensitive combination of an index tuple into one seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// FNV-1a over bytes, used for hashing canonical config text.
std::uint64_t hash_bytes(std::string_view bytes);

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace mdsize
