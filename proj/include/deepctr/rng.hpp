#pragma once

#include <cmath>
#include <cstdint>

namespace deepctr {

// Seedable, splittable pseudo-random stream (splitmix64 core).
//
// split(tag) derives an independent child stream from the current state and
// the tag, so workers / steps / instances can each own a stream that is a
// pure function of (root seed, path of tags). Nothing is shared between
// streams, which keeps multi-threaded training reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kGamma)) {}

  // Pure function of the construction key and the tag: drawing from the
  // parent before or after splitting makes no difference.
  Rng split(std::uint64_t tag) const {
    return Rng(mix(key_ + kGamma * (tag + 1)), 0);
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    return next_u64() % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (deterministic across platforms,
  // unlike std::normal_distribution).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates over [first, last).
  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[uniform_int(i)]);
    }
  }

 private:
  Rng(std::uint64_t raw_key, int) : key_(raw_key) {}

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace deepctr
