#pragma once

#include <cmath>
#include <cstdint>

#include "racs/digest.hpp"

namespace racs {

// Deterministic PRNG with explicit sampling arithmetic. std::mt19937_64 output
// is pinned by the standard, and the samplers below avoid std distributions
// whose streams vary across library implementations, so a (seed, call sequence)
// pair yields identical values on any platform.
class prng {
 public:
  explicit prng(uint64_t seed) : s_(splitmix64(seed ^ 0x5bf03635aca3c1edull)) {
    if (s_ == 0) s_ = 0x9e3779b97f4a7c15ull;  // xorshift state must be nonzero
  }

  uint64_t raw() {
    // xorshift* core; period 2^64-1, state never zero by construction.
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 0x2545f4914f6cdd1dull;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in [0, n). Modulo bias is < 2^-32 for the n used here (desk scale).
  uint64_t below(uint64_t n) { return n <= 1 ? 0 : raw() % n; }

  // Exponential inter-arrival gap for a Poisson process of the given rate
  // (events per unit time).
  double exp_gap(double rate) { return -std::log1p(-uniform01()) / rate; }

  // Derives an independent child stream; `purpose` keeps streams for different
  // uses (workload, jitter, adversary) decorrelated under a shared master seed.
  prng fork(uint64_t purpose) const {
    return prng(splitmix64(s_ ^ splitmix64(purpose)));
  }

 private:
  uint64_t s_;
};

}  // namespace racs
