#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "nystab/dense_core.hpp"
#include "nystab/types.hpp"

namespace nystab {

// First r pivots of the complete-pivoting Cholesky of A (threshold 0). If
// fewer than r positive pivots exist the set comes back shorter; callers
// detect the breakdown by comparing sizes, and downstream ranks adapt.
template <class Real>
IndexSet greedy_pivot_select(const SymMatrix<Real>& a, Index r) {
  require(r >= 1 && r <= a.n(), Errc::RankOutOfRange, "rank out of range");
  Matrix<Real> m = a.mat();
  auto [steps, perm] = detail::pivoted_cholesky_inplace(m, Real(0), r, false);
  IndexSet j;
  j.n = a.n();
  j.provenance = Provenance::greedy;
  j.idx.assign(perm.begin(), perm.begin() + steps);
  return j;
}

// First r column-pivot indices of column-pivoted Householder QR applied to A.
// Pivots maximize the residual column norm; ties take the smallest original
// column index. Residual norms are recomputed from scratch every step, which
// costs an extra O(n^2 r) but removes the classic downdating drift.
template <class Real>
IndexSet qrcp_select(const SymMatrix<Real>& a, Index r) {
  require(r >= 1 && r <= a.n(), Errc::RankOutOfRange, "rank out of range");
  const Index n = a.n();
  Matrix<Real> m = a.mat();
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  for (Index k = 0; k < r; ++k) {
    Index best = k;
    Real nmax = m.col(k).tail(n - k).squaredNorm();
    for (Index j = k + 1; j < n; ++j) {
      const Real nj = m.col(j).tail(n - k).squaredNorm();
      if (nj > nmax) {
        nmax = nj;
        best = j;
      } else if (nj == nmax && perm[static_cast<std::size_t>(j)] <
                                   perm[static_cast<std::size_t>(best)]) {
        best = j;
      }
    }
    if (best != k) {
      m.col(k).swap(m.col(best));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(best)]);
    }
    // Householder reflection zeroing column k below the diagonal, applied to
    // the trailing columns; a zero residual column leaves the matrix as is.
    auto x = m.col(k).tail(n - k);
    const Real xn = x.norm();
    const Real x0 = x(0);
    if (xn > Real(0)) {
      Vector<Real> v = x;
      v(0) += (x0 >= Real(0) ? xn : -xn);
      const Real vsq = v.squaredNorm();
      if (vsq > Real(0) && k + 1 < n) {
        auto trail = m.block(k, k + 1, n - k, n - k - 1);
        trail -= v * ((Real(2) / vsq) * (v.transpose() * trail)).eval();
      }
      m.col(k).tail(n - k).setZero();
      m(k, k) = (x0 >= Real(0) ? -xn : xn);
    }
  }
  IndexSet j;
  j.n = n;
  j.provenance = Provenance::qrcp;
  j.idx.assign(perm.begin(), perm.begin() + r);
  return j;
}

// r distinct indices drawn uniformly without replacement from the documented
// counter-based stream (draw order preserved).
inline IndexSet uniform_select(Index n, Index r, std::uint64_t seed) {
  require(n >= 1, Errc::RankOutOfRange, "matrix size must be positive");
  require(r >= 1 && r <= n, Errc::RankOutOfRange, "rank out of range");
  IndexSet j;
  j.n = n;
  j.provenance = Provenance::uniform;
  j.idx = sample_without_replacement(seed, n, r);
  return j;
}

namespace detail {

// log det A(J,J) via pivoted LDL^T; nullopt when the submatrix is not
// numerically positive definite.
template <class Real>
std::optional<Real> logdet_psd(const Matrix<Real>& w) {
  Eigen::LDLT<Matrix<Real>> ldlt(w);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  Real acc = Real(0);
  for (Index i = 0; i < w.rows(); ++i) {
    const Real d = ldlt.vectorD()(i);
    if (!(d > Real(0))) return std::nullopt;
    acc += std::log(d);
  }
  return acc;
}

// Determinant gain of every single swap for SPSD A and current set J:
//
//   det A(J - i + j, J - i + j) / det A(J, J) = B(j,i)^2 + E(j,j) * Minv(i,i)
//
// with B = A(:,J) W^-1, E(j,j) the Schur-complement diagonal and Minv the
// inverse of W = A(J,J). One factorization per sweep instead of a fresh
// determinant per candidate; verified against literal determinant
// recomputation by the exhaustive tests.
template <class Real>
struct SwapGains {
  Matrix<Real> b;        // n x r
  Vector<Real> e_diag;   // n
  Vector<Real> minv_diag;  // r
  Real logdet = Real(0);   // log det W from the same factorization
  Real gain(Index j, Index i_pos) const {
    return b(j, i_pos) * b(j, i_pos) + e_diag(j) * minv_diag(i_pos);
  }
};

template <class Real>
std::optional<SwapGains<Real>> swap_gains(const SymMatrix<Real>& a, const IndexSet& j) {
  const Index r = j.r();
  Matrix<Real> w = principal(a, j);
  Eigen::LDLT<Matrix<Real>> ldlt(w);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  SwapGains<Real> g;
  for (Index i = 0; i < r; ++i) {
    const Real d = ldlt.vectorD()(i);
    if (!(d > Real(0))) return std::nullopt;
    g.logdet += std::log(d);
  }
  Matrix<Real> c = columns(a, j);
  g.b = ldlt.solve(c.transpose()).transpose();
  g.minv_diag = ldlt.solve(Matrix<Real>::Identity(r, r)).diagonal();
  g.e_diag.resize(a.n());
  for (Index row = 0; row < a.n(); ++row)
    g.e_diag(row) = a(row, row) - c.row(row).dot(g.b.row(row));
  return g;
}

}  // namespace detail

// Iteratively applies the single swap (i in J, j notin J) with the largest
// determinant gain, accepting only gains above 1 + delta. Deterministic: max
// gain first, ties by smallest (original i, original j). Each applied swap is
// checked against the recomputed log determinant (free: it falls out of the
// next sweep's factorization); when A(J,J) is nearly singular the gain
// formula turns into roundoff noise, and without this check the loop swaps
// junk until the iteration cap. A swap that fails to deliver a real increase
// is reverted and the loop stops, so det A(J,J) grows monotonically and
// termination does not rest on the cap alone.
template <class Real>
IndexSet maxvol_refine(const SymMatrix<Real>& a, const IndexSet& j0, Real delta = Real(1e-2)) {
  check_index_set(j0, a.n());
  require(std::isfinite(static_cast<double>(delta)) && delta >= Real(0), Errc::ParamOutOfRange,
          "delta must be finite and nonnegative");
  IndexSet j = j0;
  const Index n = a.n(), r = j.r();
  const long max_swaps = 100 * static_cast<long>(n) + 1000;
  auto gains = detail::swap_gains(a, j);
  require(gains.has_value(), Errc::SingularSubmatrix,
          "A(J,J) is not numerically positive definite");
  // Accepted swaps must raise log det by at least half the advertised rate;
  // the other half absorbs roundoff in the comparison on clean problems.
  const Real min_step = std::log1p(delta) / Real(2);
  for (long iter = 0; iter < max_swaps; ++iter) {
    std::vector<bool> member(static_cast<std::size_t>(n), false);
    for (Index v : j.idx) member[static_cast<std::size_t>(v)] = true;

    Real best = -std::numeric_limits<Real>::infinity();
    Index best_i_pos = -1, best_j = -1;
    for (Index i_pos = 0; i_pos < r; ++i_pos) {
      for (Index cand = 0; cand < n; ++cand) {
        if (member[static_cast<std::size_t>(cand)]) continue;
        const Real g = gains->gain(cand, i_pos);
        const Index cur_i = j.idx[static_cast<std::size_t>(i_pos)];
        if (g > best) {
          best = g;
          best_i_pos = i_pos;
          best_j = cand;
        } else if (g == best && best_i_pos >= 0) {
          const Index bi = j.idx[static_cast<std::size_t>(best_i_pos)];
          if (cur_i < bi || (cur_i == bi && cand < best_j)) {
            best_i_pos = i_pos;
            best_j = cand;
          }
        }
      }
    }
    if (best_i_pos < 0 || !(best > Real(1) + delta)) break;
    const Index old = j.idx[static_cast<std::size_t>(best_i_pos)];
    j.idx[static_cast<std::size_t>(best_i_pos)] = best_j;
    auto next = detail::swap_gains(a, j);
    if (!next.has_value() || !(next->logdet > gains->logdet + min_step)) {
      j.idx[static_cast<std::size_t>(best_i_pos)] = old;
      break;
    }
    gains = std::move(next);
  }
  j.provenance = Provenance::refined;
  return j;
}

template <class Real>
struct MaxvolCheck {
  bool is_local_maxvol = true;
  Real worst_ratio = Real(0);  // largest det gain over all single swaps
  Index swap_out = -1;         // original indices of the worst swap
  Index swap_in = -1;
};

// Literal check of local maximal volume: recomputes det A(J',J') for every
// single swap J' and compares against det A(J,J). O(n r^4); intended for desk
// scale and as the independent route against the refinement's gain formula.
template <class Real>
MaxvolCheck<Real> verify_local_maxvol(const SymMatrix<Real>& a, const IndexSet& j,
                                      Real delta = Real(1e-2)) {
  check_index_set(j, a.n());
  require(std::isfinite(static_cast<double>(delta)) && delta >= Real(0), Errc::ParamOutOfRange,
          "delta must be finite and nonnegative");
  auto base = detail::logdet_psd(principal(a, j));
  require(base.has_value(), Errc::SingularSubmatrix,
          "A(J,J) is not numerically positive definite");
  MaxvolCheck<Real> out;
  out.worst_ratio = Real(0);
  IndexSet trial = j;
  for (std::size_t i_pos = 0; i_pos < j.idx.size(); ++i_pos) {
    for (Index cand = 0; cand < a.n(); ++cand) {
      if (j.contains(cand)) continue;
      trial.idx = j.idx;
      trial.idx[i_pos] = cand;
      auto ld = detail::logdet_psd(principal(a, trial));
      if (!ld.has_value()) continue;  // nonpositive determinant cannot win
      const Real ratio = std::exp(*ld - *base);
      if (ratio > out.worst_ratio) {
        out.worst_ratio = ratio;
        out.swap_out = j.idx[i_pos];
        out.swap_in = cand;
      }
    }
  }
  out.is_local_maxvol = !(out.worst_ratio > Real(1) + delta);
  return out;
}

// QRCP seed refined to locally maximal volume. If the seed's submatrix is
// singular (rank-deficient A), falls back to the greedy pivot prefix, which
// stops at the numerically independent columns; the shorter set is refined
// instead and downstream effective ranks adapt.
template <class Real>
IndexSet refined_select(const SymMatrix<Real>& a, Index r, Real delta = Real(1e-2)) {
  IndexSet seed = qrcp_select(a, r);
  try {
    return maxvol_refine(a, seed, delta);
  } catch (const Error& e) {
    if (e.code() != Errc::SingularSubmatrix) throw;
  }
  IndexSet greedy = greedy_pivot_select(a, r);
  try {
    return maxvol_refine(a, greedy, delta);
  } catch (const Error& e) {
    if (e.code() != Errc::SingularSubmatrix) throw;
  }
  return greedy;
}

// Stability indicators for a chosen index set. Q-based fields need A(:,J) to
// have full numerical column rank.
struct StabilityDiagnostics {
  double sigma_min_sq = 0;        // sigma_min(S^T Q), Q = orth basis of A(:,J)
  double proj_norm = 0;           // || A(:,J) (A(J,J))_eps^dagger ||_2
  double eps_proj_residual = 0;   // || A(:,J) (A(J,J))_eps^dagger A(J,J) - A(:,J) ||_2
  double maxnorm_err = 0;         // || A - plain Nystrom ||_max (NaN on breakdown)
  double det_value = 0;           // log det A(J,J) (-inf if not positive definite)
};

template <class Real>
Real spectral_norm_rect(const Matrix<Real>& m) {
  Eigen::BDCSVD<Matrix<Real>> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : Real(0);
}

template <class Real>
StabilityDiagnostics diagnostics(const SymMatrix<Real>& a, const IndexSet& j, Real epsilon) {
  check_index_set(j, a.n());
  require(std::isfinite(static_cast<double>(epsilon)) && epsilon >= Real(0),
          Errc::ParamOutOfRange, "epsilon must be finite and nonnegative");
  const Matrix<Real> c = columns(a, j);
  const SymMatrix<Real> w(principal(a, j), a.psd_hint());

  ThinQR<Real> qr = thin_qr(c);
  require(!qr.rank_deficient, Errc::RankDeficientSample,
          "A(:,J) is numerically rank deficient");
  Matrix<Real> sq(j.r(), j.r());
  for (Index i = 0; i < j.r(); ++i) sq.row(i) = qr.q.row(j.idx[static_cast<std::size_t>(i)]);
  Eigen::BDCSVD<Matrix<Real>> svd(sq);
  StabilityDiagnostics d;
  d.sigma_min_sq = static_cast<double>(svd.singularValues()(j.r() - 1));

  // (A(J,J))_eps^dagger applied through the eigenfactor, never formed as an
  // explicit r x r inverse: the low-magnitude directions are exactly what the
  // truncation removed, and reintroducing them through roundoff would defeat
  // the point of the diagnostic.
  EigTruncFactor<Real> et = eig_truncate(w, epsilon);
  Matrix<Real> g;
  if (et.r_hat == 0) {
    g = Matrix<Real>::Zero(a.n(), j.r());
  } else {
    Matrix<Real> cu = c * et.evecs;
    for (Index k = 0; k < et.r_hat; ++k) cu.col(k) /= et.evals(k);
    g = cu * et.evecs.transpose();
  }
  d.proj_norm = static_cast<double>(spectral_norm_rect(g));
  d.eps_proj_residual = static_cast<double>(spectral_norm_rect<Real>(g * w.mat() - c));

  auto ld = detail::logdet_psd(w.mat());
  d.det_value = ld.has_value() ? static_cast<double>(*ld)
                               : -std::numeric_limits<double>::infinity();

  d.maxnorm_err = std::numeric_limits<double>::quiet_NaN();
  try {
    const Matrix<Real> rfac = unpivoted_cholesky(w.mat());
    const Matrix<Real> b =
        rfac.template triangularView<Eigen::Upper>().template solve<Eigen::OnTheRight>(c);
    d.maxnorm_err = static_cast<double>((a.mat() - b * b.transpose()).cwiseAbs().maxCoeff());
  } catch (const Error& e) {
    if (e.code() != Errc::CholeskyBreakdown) throw;
  }
  return d;
}

}  // namespace nystab
