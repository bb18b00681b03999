#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "nystab/errors.hpp"

namespace nystab {

// Counter-based pseudo-random stream built on the SplitMix64 finalizer.
//
// Output k (k >= 0) of a stream with seed s is
//
//     mix(s + (k + 1) * 0x9E3779B97F4A7C15)
//
// where mix is the SplitMix64 finalizer
//
//     z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
//     z ^= z >> 27;  z *= 0x94D049BB133111EB;
//     z ^= z >> 31;
//
// i.e. exactly the k-th output of sequential SplitMix64 seeded with s, but
// addressable by counter, so out-of-order or parallel element generation can
// never change results. Derived mappings (reimplemented verbatim by tests):
//
//   u64(k)      raw 64-bit output
//   unit(k)     (u64(k) >> 11) * 2^-53                    in [0, 1)
//   below(k,m)  u64(k) % m                                in [0, m)
//   normal(k)   Box-Muller from the pair u64(2k), u64(2k+1):
//                 u     = ((u64(2k) >> 11) + 1) * 2^-53   in (0, 1]
//                 theta = 2*pi * unit from u64(2k+1)
//                 value = sqrt(-2 ln u) * cos(theta)
//
// Sub-streams (independent per-purpose streams derived from one seed) are
// seeded with raw outputs of the parent: sub_i = CounterRng(parent.u64(i)).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t u64(std::uint64_t k) const {
    return mix(seed_ + (k + 1) * 0x9E3779B97F4A7C15ull);
  }

  double unit(std::uint64_t k) const {
    return static_cast<double>(u64(k) >> 11) * 0x1.0p-53;
  }

  std::uint64_t below(std::uint64_t k, std::uint64_t m) const { return u64(k) % m; }

  double normal(std::uint64_t k) const {
    const double u = (static_cast<double>(u64(2 * k) >> 11) + 1.0) * 0x1.0p-53;
    const double theta = 2.0 * M_PI * unit(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(theta);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// r distinct values from {0, ..., n-1} by a partial Fisher-Yates shuffle:
// step t (t = 0..r-1) swaps position t with position t + below(t, n - t).
// Returned in draw order.
inline std::vector<long> sample_without_replacement(std::uint64_t seed, long n, long r) {
  require(n >= 1, Errc::CountOutOfRange, "population size must be positive");
  require(r >= 1 && r <= n, Errc::CountOutOfRange, "sample size out of range");
  CounterRng g(seed);
  std::vector<long> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0L);
  for (long t = 0; t < r; ++t) {
    const long j = t + static_cast<long>(g.below(static_cast<std::uint64_t>(t),
                                                 static_cast<std::uint64_t>(n - t)));
    std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(r));
  return pool;
}

}  // namespace nystab
