#pragma once

#include <cstdint>

namespace tensorlim {

// splitmix64 finalizer; all reproducibility flows through this mixer.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

template <typename... Rest>
inline uint64_t mix(uint64_t a, uint64_t b, Rest... rest) {
  return mix(mix(a, b), static_cast<uint64_t>(rest)...);
}

// Uniform in the open interval (0,1), 53-bit resolution.
inline double u01_at(uint64_t key) {
  return (static_cast<double>(splitmix64(key) >> 11) + 0.5) * 0x1p-53;
}

// Wichura's PPND16 (AS 241): inverse of the standard normal CDF.
double inverse_normal_cdf(double p);

inline double gauss_at(uint64_t key) { return inverse_normal_cdf(u01_at(key)); }

// Small sequential stream for places where a counter-based draw is awkward.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed)) {}
  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
  double uniform01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53; }
  double gaussian() { return inverse_normal_cdf(uniform01()); }
  // Uniform integer in [0, n)
  uint64_t below(uint64_t n) { return next_u64() % n; }

 private:
  uint64_t state_;
};

}  // namespace tensorlim
