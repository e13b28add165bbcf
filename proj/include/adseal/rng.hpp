#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace adseal {

// Seeded RNG handed explicitly to everything that draws random numbers.
// One engine per logical stream; derive() forks independent streams so
// per-client / per-user work stays order-independent.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  // N(mean, stddev^2)
  double normal(double mean, double stddev) {
    return mean + stddev * normal_(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n), n >= 1.
  uint64_t below(uint64_t n) {
    std::uniform_int_distribution<uint64_t> d(0, n - 1);
    return d(engine_);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), engine_);
  }

  std::mt19937_64& engine() { return engine_; }

  // Deterministic sub-stream: same (seed, tag, index) -> same stream.
  static uint64_t derive(uint64_t seed, uint64_t tag, uint64_t index) {
    // splitmix64 over the mixed key
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace adseal
