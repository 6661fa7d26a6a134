#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace ptsim {

// Seeded random stream built on std::mt19937_64, whose output sequence is
// fixed by the standard. Distribution code is local (the standard library's
// distributions are implementation-defined), so a given seed yields the same
// draws on every platform.
//
// Draw costs: uniform/pick/index = 1 word, exponential = 1, normal = 2
// (Box-Muller, no caching).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : _gen(seed) {}

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(_gen() >> 11) * 0x1.0p-53; }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  double normal(double mean, double sd) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t index(std::size_t n) {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  // Index drawn proportionally to the (non-negative) weights.
  std::size_t pick(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    for (std::size_t i = weights.size(); i > 0; --i)
      if (weights[i - 1] > 0) return i - 1;
    return 0;
  }

 private:
  std::mt19937_64 _gen;
};

}  // namespace ptsim
