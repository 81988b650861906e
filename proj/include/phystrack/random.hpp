#pragma once

#include <cstdint>
#include <limits>

namespace phystrack {

/// xoshiro256** seeded through splitmix64. All derived variates (uniform,
/// normal, Poisson) are computed here rather than by <random> distributions so
/// sequences reproduce bit-identically across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);
  /// Independent stream for (seed, stream); streams do not shift each other.
  static Rng stream(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next(); }

  std::uint64_t next();
  /// [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (pairs cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Knuth multiplication method; intended for small means.
  int poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace phystrack
