#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace ipd {

/// SplitMix64 finalizer; used to derive independent seeds from (seed, salt).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) { return mix64(seed ^ mix64(salt)); }

/// Uniform double in [0, 1) from 53 random bits.
constexpr double unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Fisher-Yates over mt19937_64 with rejection sampling. Unlike std::shuffle the
/// resulting order is identical on every standard library.
template <typename T>
void portable_shuffle(std::span<T> items, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
      draw = engine();
    } while (draw >= limit);
    std::swap(items[i - 1], items[draw % bound]);
  }
}

}  // namespace ipd
