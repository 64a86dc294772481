/* Copyright 2026 The volseg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cmath>
#include <cstdint>

namespace volseg {

/// SplitMix64. The generator is part of the reproducibility contract:
/// identical seeds give identical streams, independent of platform and of
/// the standard library. Do not swap it for std::mt19937 or similar.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53 mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [0, n). Plain modulo; the sub-ppm bias is
  /// irrelevant here and the mapping is pinned for reproducibility.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via the Box-Muller transform; generates pairs and
  /// caches the second value.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

/// Derives a child seed from (parent, index); used to hand independent
/// streams to samples, nets, and training loops. Two SplitMix64 steps with
/// the index folded in between.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  SplitMix64 g(parent);
  std::uint64_t a = g.next_u64() ^ (index * 0xD1342543DE82EF95ULL + 1);
  SplitMix64 h(a);
  return h.next_u64();
}

}  // namespace volseg
