#pragma once

#include <cstdint>
#include <random>

namespace gel {

// RNG algorithm identifier pinned into run manifests. mt19937_64 is fully
// specified by the C++ standard and the Box-Muller transform is written out
// explicitly below, so streams are reproducible across platforms.
inline constexpr const char* kRngAlgorithm = "mt19937_64+box-muller";

// Seeded generator with explicit uniform/normal transforms. Distributions
// from <random> are not used because their output is not pinned by the
// standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via the basic Box-Muller transform; the second variate
  // of each pair is cached.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace gel
