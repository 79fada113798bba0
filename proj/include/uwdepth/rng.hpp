#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace uwdepth {

/// Deterministic RNG threaded explicitly through initialization and
/// augmentation. Variates are derived from raw engine words so sequences do
/// not depend on standard-library distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t integer(uint64_t n) {
    return n == 0 ? 0 : static_cast<uint64_t>(uniform() * static_cast<double>(n));
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Stable per-record seed: FNV-1a over the id folded with the global seed
/// (and an optional epoch salt), so records can be processed in any order.
uint64_t derive_seed(uint64_t global_seed, const std::string& id,
                     uint64_t salt = 0);

}  // namespace uwdepth
