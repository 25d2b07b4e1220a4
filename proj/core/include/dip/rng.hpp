#pragma once

#include <cstdint>

namespace dip {

/// Counter-based generator. The n-th raw draw of a stream is
///
///   x = key + n * 0x9E3779B97F4A7C15      (n = 1, 2, ...; mod 2^64)
///   x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
///   x = (x ^ (x >> 27)) * 0x94D049BB133111EB
///   out = x ^ (x >> 31)
///
/// i.e. the SplitMix64 finalizer applied to a Weyl sequence. The key is the
/// finalizer applied to seed ^ (stream * 0xD1B54A32D192ED03), so distinct
/// streams of one seed are decorrelated. Doubles in [0,1) take the top 53
/// bits: (out >> 11) * 2^-53. Normals use the Box-Muller pair
/// (r cos t, r sin t) with r = sqrt(-2 ln(1-u1)), t = 2 pi u2; the second
/// value of each pair is cached.
///
/// Raw integer and uniform streams are bit-identical on every platform;
/// normal draws go through libm log/cos/sin.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double next_double() noexcept;
  /// Uniform in [lo, hi). Requires lo < hi.
  double uniform(double lo, double hi) noexcept;
  double normal(double mean, double stddev) noexcept;
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Independent generator derived from this one's seed.
  Rng fork(std::uint64_t stream) const { return Rng(seed_, stream); }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace dip
