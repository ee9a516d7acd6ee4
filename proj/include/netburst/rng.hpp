#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace netburst {

// Documented 64-bit mix used to derive per-entity seeds: one splitmix64 step
// of (seed + (index+1) * golden gamma). Entity i's stream is independent of
// how many entities run and in which order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
}

// mt19937_64 with hand-rolled output maps. The std distributions are not
// pinned by the standard, so every draw here is defined in terms of raw
// 64-bit engine output and reproduces bit-exactly for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t u64() { return engine_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n); Lemire multiply-shift
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(u64()) * n) >> 64);
  }

  // Box-Muller, cosine branch only (no cached state)
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * 3.141592653589793238462643 * u2);
  }

  // inverse-CDF Pareto draw: xm * (1-u)^(-1/alpha)
  double pareto(double alpha, double xm) {
    return xm * std::pow(1.0 - uniform(), -1.0 / alpha);
  }

  // geometric on {1, 2, ...} with success probability p
  std::int64_t geometric(double p) {
    if (p >= 1.0) return 1;
    double u = uniform();
    return 1 + static_cast<std::int64_t>(std::log1p(-u) / std::log1p(-p));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace netburst
