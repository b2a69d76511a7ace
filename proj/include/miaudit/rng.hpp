#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace miaudit {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent 64-bit seed from a base seed and a salt/stream id.
inline uint64_t derive_seed(uint64_t seed, uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt ^ 0xd1b54a32d192ed03ULL));
}

// Deterministic generator keyed by (seed, stream). A SplitMix64 chain: the
// same (seed, stream) pair reproduces the same sequence on every platform,
// which <random> distributions do not guarantee. Every stochastic operation
// in the toolkit owns an explicit stream so parallel work stays reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : state_(derive_seed(seed, stream)) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  /// Uniform integer in [lo, hi], inclusive. Unbiased via rejection.
  int64_t next_int(int64_t lo, int64_t hi) {
    uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<int64_t>(next_u64());  // full range
    uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return lo + static_cast<int64_t>(x % range);
  }

  /// Standard normal via Box-Muller; caches the second value of each pair.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - next_double();  // (0, 1]; keeps log finite
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace miaudit
