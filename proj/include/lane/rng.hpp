#pragma once

#include <cmath>
#include <cstdint>

namespace lane {

// SplitMix64. Counter-based: the n-th output is a pure function of
// (seed, n), so streams are reproducible bit-for-bit on every platform.
// Used for all randomized operations in the project; std::mt19937 and
// std::*_distribution are avoided because their outputs are not pinned
// across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64 in
    // every call site, so the bias is far below reproducibility concerns,
    // and determinism is what matters.
    return next_u64() % n;
  }

  // Standard normal via Box-Muller (one value per call, cached pair).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard log(0).
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lane
