#pragma once

// Counter-based random streams. A stream is identified by a 64-bit key
// derived from the master seed and a path of integers, so records can be
// generated in any order (or in parallel) with identical results.

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace qns {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Key of the substream reached from `seed` by following `path`.
std::uint64_t substream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
      : key_(substream_key(seed, path)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qns
