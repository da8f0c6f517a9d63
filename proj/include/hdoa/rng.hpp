#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace hdoa {

// SplitMix64 generator (Steele/Lea/Flood). Streams derived from
// (master seed, stream index) make every sample's draws independent of
// thread count and evaluation order. The exact construction, including
// the uniform and Gaussian transforms below, is part of the dataset
// format; see docs/FORMATS.md.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  // Stream `index` of `master`: initial state = mix64(master + (index+1)*GAMMA),
  // all arithmetic mod 2^64.
  static SplitMix64 stream(std::uint64_t master, std::uint64_t index) {
    return SplitMix64(mix64(master + (index + 1) * kGamma));
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller standard normal pair; u1 lies in (0, 1] so log(u1) is finite.
  std::pair<double, double> normal_pair() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  // Uniform integer in [0, n), used for deterministic shuffles.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::uint64_t state_;
};

}  // namespace hdoa
