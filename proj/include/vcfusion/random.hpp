#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vcfusion
{

using Rng = std::mt19937_64;

// splitmix64 finalizer
inline constexpr std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

/// Named sub-seed: every random consumer (scenario, detector, sampler,
/// training, ...) draws from its own stream so one can be re-seeded
/// without disturbing the others.
inline constexpr std::uint64_t derive_seed(
  std::uint64_t base, std::string_view tag, std::uint64_t index = 0)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(base ^ h) + index);
}

}  // namespace vcfusion
