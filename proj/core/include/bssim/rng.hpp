#pragma once

#include <cstdint>
#include <random>

#include "bssim/types.hpp"

namespace bssim {

/// Seed-splitting rule for independent parallel streams: stream j of a base
/// seed is base ^ (j * 0x9E3779B97F4A7C15). Streams for distinct j may be
/// consumed concurrently; results do not depend on scheduling.
inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t j) {
  return base ^ (j * 0x9E3779B97F4A7C15ULL);
}

/// Seedable generator for all stochastic operations. Same seed, same bits,
/// within one build of the library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard circular complex Gaussian: E{|z|^2} = 1, E{z^2} = 0.
  cd circular_gaussian() {
    const double s = 0.7071067811865475244;  // 1/sqrt(2)
    return cd(normal() * s, normal() * s);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace bssim
