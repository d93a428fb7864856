#pragma once

#include <cstdint>
#include <random>

#include "boolmp/core.hpp"

namespace boolmp {

// Seedable generator used everywhere randomness is needed. mt19937_64 output
// is pinned by the standard, and all derived draws below avoid
// distribution classes whose algorithms are implementation-defined, so a
// seed reproduces bit-identical streams on any conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent substream: (seed, stream) feed a seed_seq.
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    gen_.seed(seq);
  }

  std::uint64_t next() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw input_error("Rng::below: empty range");
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  // log(U) - log(1-U) for U ~ Uniform(0,1); clamped to the finite range.
  double logit_of_uniform() {
    double u = uniform01();
    return clamp_log_ratio(std::log(u) - std::log1p(-u));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace boolmp
