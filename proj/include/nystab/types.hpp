#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nystab/errors.hpp"

namespace nystab {

using Index = Eigen::Index;

template <class Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Unit roundoff of a scalar type (half the machine epsilon).
template <class Real>
constexpr Real unit_roundoff() {
  return std::numeric_limits<Real>::epsilon() / Real(2);
}

// Dense symmetric matrix. Symmetry is enforced on construction by averaging
// with the transpose (a no-op for already-symmetric input), entries must be
// finite, and n >= 1.
template <class Real>
class SymMatrix {
 public:
  explicit SymMatrix(Matrix<Real> m, bool psd_hint = false) : psd_hint_(psd_hint) {
    require(m.rows() >= 1, Errc::DimensionMismatch, "matrix must be nonempty");
    require(m.rows() == m.cols(), Errc::DimensionMismatch, "matrix must be square");
    require(m.allFinite(), Errc::NonFiniteInput, "matrix has non-finite entries");
    m_ = ((m + m.transpose()) * Real(0.5)).eval();
  }

  Index n() const { return m_.rows(); }
  const Matrix<Real>& mat() const { return m_; }
  Real operator()(Index i, Index j) const { return m_(i, j); }
  bool psd_hint() const { return psd_hint_; }

 private:
  Matrix<Real> m_;
  bool psd_hint_ = false;
};

template <class To, class From>
SymMatrix<To> sym_cast(const SymMatrix<From>& a) {
  return SymMatrix<To>(a.mat().template cast<To>(), a.psd_hint());
}

enum class Provenance { greedy, qrcp, uniform, refined };

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::greedy: return "greedy";
    case Provenance::qrcp: return "qrcp";
    case Provenance::uniform: return "uniform";
    case Provenance::refined: return "refined";
  }
  return "?";
}

// Ordered set of distinct 0-based column indices of an n x n matrix.
struct IndexSet {
  std::vector<Index> idx;
  Index n = 0;
  Provenance provenance = Provenance::uniform;

  Index r() const { return static_cast<Index>(idx.size()); }

  bool contains(Index v) const { return std::find(idx.begin(), idx.end(), v) != idx.end(); }
};

inline void check_index_set(const IndexSet& j, Index n) {
  require(j.n == n, Errc::DimensionMismatch, "index set built for a different matrix size");
  require(j.r() >= 1 && j.r() <= n, Errc::RankOutOfRange, "index set size out of range");
  std::vector<Index> sorted = j.idx;
  std::sort(sorted.begin(), sorted.end());
  require(sorted.front() >= 0 && sorted.back() < n, Errc::RankOutOfRange,
          "index out of range");
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          Errc::RankOutOfRange, "indices must be distinct");
}

// A(:, J) as a dense n x r block.
template <class Real>
Matrix<Real> columns(const SymMatrix<Real>& a, const IndexSet& j) {
  check_index_set(j, a.n());
  Matrix<Real> c(a.n(), j.r());
  for (Index k = 0; k < j.r(); ++k) c.col(k) = a.mat().col(j.idx[static_cast<std::size_t>(k)]);
  return c;
}

// A(J, J) as a dense r x r block (symmetric by construction).
template <class Real>
Matrix<Real> principal(const SymMatrix<Real>& a, const IndexSet& j) {
  check_index_set(j, a.n());
  Matrix<Real> w(j.r(), j.r());
  for (Index p = 0; p < j.r(); ++p)
    for (Index q = 0; q < j.r(); ++q)
      w(p, q) = a(j.idx[static_cast<std::size_t>(p)], j.idx[static_cast<std::size_t>(q)]);
  return w;
}

}  // namespace nystab
