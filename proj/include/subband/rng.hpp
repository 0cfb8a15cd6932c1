// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace subband {

namespace detail {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

/// Counter-based generator (splitmix64 finalizer over key + i*golden).
/// Output i depends only on (key, i), so draws are reproducible no matter
/// how work is split across threads; `stream` derives disjoint keys for
/// independent consumers (one per parameter tensor, dropout layer, epoch...).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return CounterRng(detail::mix64(seed + detail::kGolden) ^
                      detail::mix64(stream_id * detail::kGolden + 1));
  }

  std::uint64_t at(std::uint64_t i) const {
    return detail::mix64(key_ + (i + 1) * detail::kGolden);
  }

  std::uint64_t next_u64() { return at(counter_++); }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in {0, ..., bound-1} (multiply-shift reduction).
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// Standard normal via Box-Muller; consumes two counters per draw.
  double next_normal() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Seeded Fisher-Yates permutation of {0, ..., n-1}.
inline std::vector<std::int64_t> random_permutation(std::int64_t n, CounterRng rng) {
  std::vector<std::int64_t> p(n);
  for (std::int64_t i = 0; i < n; ++i) p[i] = i;
  for (std::int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(i + 1)));
    std::swap(p[i], p[j]);
  }
  return p;
}

}  // namespace subband
