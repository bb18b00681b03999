#pragma once

// Independent oracles for the test suites: the PRNG contract re-derived from
// its documentation, naive determinant and subset enumeration, and small
// matrix builders. Deliberately written against the documented contracts,
// not the library code, so drift in either shows up as a failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "nystab/kernels_data.hpp"
#include "nystab/rng.hpp"
#include "nystab/types.hpp"

namespace testsupport {

using nystab::Index;
using nystab::IndexSet;
using nystab::Matrix;
using nystab::SymMatrix;
using nystab::Vector;

inline std::uint64_t oracle_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t oracle_u64(std::uint64_t seed, std::uint64_t k) {
  return oracle_mix(seed + (k + 1) * 0x9E3779B97F4A7C15ull);
}

inline double oracle_unit(std::uint64_t seed, std::uint64_t k) {
  return static_cast<double>(oracle_u64(seed, k) >> 11) * 0x1.0p-53;
}

inline double oracle_normal(std::uint64_t seed, std::uint64_t k) {
  const double u = (static_cast<double>(oracle_u64(seed, 2 * k) >> 11) + 1.0) * 0x1.0p-53;
  const double theta = 2.0 * M_PI * oracle_unit(seed, 2 * k + 1);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(theta);
}

inline std::vector<long> oracle_sample(std::uint64_t seed, long n, long r) {
  std::vector<long> pool(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (long t = 0; t < r; ++t) {
    const std::uint64_t draw = oracle_u64(seed, static_cast<std::uint64_t>(t));
    const long j = t + static_cast<long>(draw % static_cast<std::uint64_t>(n - t));
    std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(r));
  return pool;
}

inline IndexSet make_set(std::vector<Index> idx, Index n) {
  IndexSet j;
  j.idx = std::move(idx);
  j.n = n;
  return j;
}

// log det of a principal submatrix through the full spectrum of the
// extracted block; nullopt when not numerically positive definite.
inline std::optional<double> oracle_logdet(const SymMatrix<double>& a,
                                           const std::vector<Index>& idx) {
  const Index r = static_cast<Index>(idx.size());
  Matrix<double> w(r, r);
  for (Index p = 0; p < r; ++p)
    for (Index q = 0; q < r; ++q)
      w(p, q) = a(idx[static_cast<std::size_t>(p)], idx[static_cast<std::size_t>(q)]);
  Eigen::SelfAdjointEigenSolver<Matrix<double>> es(w);
  double out = 0;
  for (Index i = 0; i < r; ++i) {
    if (es.eigenvalues()(i) <= 0) return std::nullopt;
    out += std::log(es.eigenvalues()(i));
  }
  return out;
}

// all r-subsets of {0..n-1} in lexicographic order
inline std::vector<std::vector<Index>> all_subsets(Index n, Index r) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> cur(static_cast<std::size_t>(r));
  const auto rec = [&](auto&& self, Index start, Index depth) -> void {
    if (depth == r) {
      out.push_back(cur);
      return;
    }
    for (Index v = start; v <= n - (r - depth); ++v) {
      cur[static_cast<std::size_t>(depth)] = v;
      self(self, v + 1, depth + 1);
    }
  };
  rec(rec, 0, 0);
  return out;
}

inline Matrix<double> gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  nystab::CounterRng g(seed);
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      m(i, j) = g.normal(static_cast<std::uint64_t>(i * cols + j));
  return m;
}

inline SymMatrix<double> random_spd(Index n, std::uint64_t seed, double ridge = 1e-3) {
  const Matrix<double> g = gaussian_matrix(n, n, seed);
  Matrix<double> m = g * g.transpose() / static_cast<double>(n);
  m += Matrix<double>::Identity(n, n) * ridge;
  return SymMatrix<double>(std::move(m), true);
}

inline double exact_spectral_norm(const Matrix<double>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix<double>> es(((m + m.transpose()) * 0.5).eval());
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace testsupport
