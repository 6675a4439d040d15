#pragma once

#include <cstdint>
#include <string_view>

namespace transportlab {

// Counter-based generation: every variate is a pure function of
// (seed, stream, row), so sampling order and thread count never matter.

inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream,
                                            std::uint64_t row) {
  return mix64(mix64(mix64(seed) ^ stream) ^ row);
}

// Uniform on [0, 1): top 53 bits scaled down, so every value is exactly
// representable and strictly below one.
inline constexpr double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t row) {
  return static_cast<double>(counter_bits(seed, stream, row) >> 11) * 0x1.0p-53;
}

inline constexpr std::uint64_t stream_of(std::string_view node_name) { return fnv1a(node_name); }

}  // namespace transportlab
