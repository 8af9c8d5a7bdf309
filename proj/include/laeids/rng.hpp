#pragma once

#include <cstdint>
#include <random>

namespace laeids {

uint64_t splitmix64(uint64_t x);

// Derives an independent child seed for a named sub-stream, so modules can
// split one run seed into many decorrelated streams without sharing state.
uint64_t derive_seed(uint64_t base, uint64_t stream);

// Deterministic random stream. All draws go through fixed bit-level
// conversions instead of std <random> distributions, so seeded sequences are
// stable across standard library versions and stay valid in frozen fixtures.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Inclusive bounds.
  int64_t uniform_int(int64_t lo, int64_t hi);
  // Standard normal via Box-Muller; one value per call.
  double normal();

 private:
  std::mt19937_64 gen_;
};

}  // namespace laeids
