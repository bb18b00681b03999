#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "nystab/rng.hpp"
#include "nystab/types.hpp"

namespace nystab {

// Result of the epsilon-truncated pivoted Cholesky of an r x r SPSD matrix W:
// with P the permutation that puts the pivots first,
//     (P^T W P)(0:r_hat, 0:r_hat) ~ upper-left block of rows^T rows,
// i.e. rows is r_hat x r upper-trapezoidal and rows^T rows reproduces
// W(perm, perm) up to a residual whose diagonal is below epsilon.
template <class Real>
struct TruncCholFactor {
  Index r = 0;
  Index r_hat = 0;
  Matrix<Real> rows;        // r_hat x r, columns in pivot order
  std::vector<Index> perm;  // length r; maps factor column -> original index
  Real epsilon = Real(0);
};

namespace detail {

// Complete-pivoting Cholesky, factoring in place until the largest remaining
// Schur-complement diagonal drops below `epsilon` (or `max_steps` is hit, or
// no positive diagonal remains). Ties pick the smallest original index. With
// `negative_guard`, a remaining diagonal below -epsilon aborts: the input is
// too indefinite for a PSD factorization to be meaningful.
template <class Real>
std::pair<Index, std::vector<Index>> pivoted_cholesky_inplace(Matrix<Real>& m, Real epsilon,
                                                              Index max_steps,
                                                              bool negative_guard) {
  const Index r = m.rows();
  std::vector<Index> perm(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) perm[static_cast<std::size_t>(i)] = i;

  Index steps = 0;
  for (Index k = 0; k < max_steps; ++k) {
    Index best = k;
    Real dmax = m(k, k);
    Real dmin = m(k, k);
    for (Index j = k + 1; j < r; ++j) {
      const Real d = m(j, j);
      if (d > dmax) {
        dmax = d;
        best = j;
      } else if (d == dmax && perm[static_cast<std::size_t>(j)] <
                                  perm[static_cast<std::size_t>(best)]) {
        best = j;
      }
      if (d < dmin) dmin = d;
    }
    if (negative_guard && dmin < -epsilon)
      raise(Errc::NegativePivotDominant,
            "remaining diagonal " + std::to_string(static_cast<double>(dmin)) +
                " is more negative than -epsilon");
    if (dmax < epsilon || dmax <= Real(0)) break;

    if (best != k) {
      m.row(k).swap(m.row(best));
      m.col(k).swap(m.col(best));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(best)]);
    }
    const Real piv = std::sqrt(m(k, k));
    m(k, k) = piv;
    for (Index j = k + 1; j < r; ++j) m(k, j) /= piv;
    for (Index j = k + 1; j < r; ++j) {
      const Real rkj = m(k, j);
      for (Index i = k + 1; i <= j; ++i) {
        const Real v = m(i, j) - m(k, i) * rkj;
        m(i, j) = v;
        m(j, i) = v;
      }
    }
    steps = k + 1;
  }
  return {steps, perm};
}

}  // namespace detail

// Epsilon-truncated pivoted Cholesky (complete pivoting, absolute threshold):
// stops once the largest remaining Schur-complement diagonal is below epsilon.
template <class Real>
TruncCholFactor<Real> pivoted_cholesky_trunc(const SymMatrix<Real>& w, Real epsilon) {
  require(std::isfinite(static_cast<double>(epsilon)) && epsilon >= Real(0),
          Errc::ParamOutOfRange, "epsilon must be finite and nonnegative");
  Matrix<Real> m = w.mat();
  auto [steps, perm] = detail::pivoted_cholesky_inplace(m, epsilon, w.n(), true);
  TruncCholFactor<Real> f;
  f.r = w.n();
  f.r_hat = steps;
  f.perm = std::move(perm);
  f.epsilon = epsilon;
  f.rows = Matrix<Real>::Zero(steps, w.n());
  for (Index i = 0; i < steps; ++i)
    for (Index j = i; j < w.n(); ++j) f.rows(i, j) = m(i, j);
  return f;
}

// W(perm, perm) - rows^T rows, the factorization residual (diagnostic).
template <class Real>
Matrix<Real> trunc_chol_residual(const SymMatrix<Real>& w, const TruncCholFactor<Real>& f) {
  Matrix<Real> wp(f.r, f.r);
  for (Index i = 0; i < f.r; ++i)
    for (Index j = 0; j < f.r; ++j)
      wp(i, j) = w(f.perm[static_cast<std::size_t>(i)], f.perm[static_cast<std::size_t>(j)]);
  return wp - f.rows.transpose() * f.rows;
}

// Unpivoted Cholesky W = R^T R with R upper triangular. Fails on the first
// nonpositive pivot, reporting its index; this is the factorization the plain
// Nystrom route depends on, so breakdown must surface rather than be patched.
template <class Real>
Matrix<Real> unpivoted_cholesky(const Matrix<Real>& w) {
  const Index r = w.rows();
  Matrix<Real> m = w;
  for (Index k = 0; k < r; ++k) {
    if (!(m(k, k) > Real(0)))
      raise(Errc::CholeskyBreakdown,
            "nonpositive pivot at index " + std::to_string(static_cast<long>(k)));
    const Real piv = std::sqrt(m(k, k));
    m(k, k) = piv;
    for (Index j = k + 1; j < r; ++j) m(k, j) /= piv;
    for (Index j = k + 1; j < r; ++j)
      for (Index i = k + 1; i <= j; ++i) {
        const Real v = m(i, j) - m(k, i) * m(k, j);
        m(i, j) = v;
        m(j, i) = v;
      }
  }
  Matrix<Real> out = m.template triangularView<Eigen::Upper>();
  return out;
}

// Truncated symmetric eigendecomposition: the definitional route for (W)_eps.
// Keeps eigenpairs with eigenvalue >= epsilon, eigenvalues descending.
template <class Real>
struct EigTruncFactor {
  Index r = 0;
  Index r_hat = 0;
  Vector<Real> evals;   // r_hat, descending, all >= epsilon
  Matrix<Real> evecs;   // r x r_hat, orthonormal columns
  Real epsilon = Real(0);
};

template <class Real>
EigTruncFactor<Real> eig_truncate(const SymMatrix<Real>& w, Real epsilon) {
  require(std::isfinite(static_cast<double>(epsilon)), Errc::ParamOutOfRange,
          "epsilon must be finite");
  Eigen::SelfAdjointEigenSolver<Matrix<Real>> es(w.mat());
  require(es.info() == Eigen::Success, Errc::NonFiniteInput, "eigendecomposition failed");
  const Index r = w.n();
  Index kept = 0;
  for (Index i = 0; i < r; ++i)
    if (es.eigenvalues()(i) >= epsilon) ++kept;
  EigTruncFactor<Real> f;
  f.r = r;
  f.r_hat = kept;
  f.epsilon = epsilon;
  f.evals.resize(kept);
  f.evecs.resize(r, kept);
  // Eigen returns ascending order; emit descending.
  for (Index i = 0; i < kept; ++i) {
    f.evals(i) = es.eigenvalues()(r - 1 - i);
    f.evecs.col(i) = es.eigenvectors().col(r - 1 - i);
  }
  return f;
}

// Thin Householder QR of a tall matrix (n x r, r <= n), with the sign
// convention diag(R) >= 0. Rank deficiency does not fail, it is flagged.
template <class Real>
struct ThinQR {
  Matrix<Real> q;  // n x r, orthonormal columns
  Matrix<Real> r;  // r x r, upper triangular, nonnegative diagonal
  bool rank_deficient = false;
};

template <class Real>
ThinQR<Real> thin_qr(const Matrix<Real>& m) {
  require(m.rows() >= m.cols() && m.cols() >= 1, Errc::DimensionMismatch,
          "thin QR needs a tall matrix");
  require(m.allFinite(), Errc::NonFiniteInput, "matrix has non-finite entries");
  const Index n = m.rows(), r = m.cols();
  Eigen::HouseholderQR<Matrix<Real>> qr(m);
  ThinQR<Real> out;
  out.q = qr.householderQ() * Matrix<Real>::Identity(n, r);
  out.r = qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
  for (Index i = 0; i < r; ++i) {
    if (out.r(i, i) < Real(0)) {
      out.r.row(i) = -out.r.row(i);
      out.q.col(i) = -out.q.col(i);
    }
  }
  Real dmax = Real(0);
  for (Index i = 0; i < r; ++i) dmax = std::max(dmax, out.r(i, i));
  for (Index i = 0; i < r; ++i)
    if (out.r(i, i) <= Real(n) * unit_roundoff<Real>() * dmax) out.rank_deficient = true;
  return out;
}

// Rank-r truncated eigendecomposition of a symmetric matrix (top r eigenpairs
// by eigenvalue; intended for SPSD input, negative values are clamped to 0).
template <class Real>
struct TsvdApprox {
  Index rank = 0;
  Matrix<Real> left;     // n x rank
  Vector<Real> singvals; // rank, nonincreasing, nonnegative
};

template <class Real>
TsvdApprox<Real> tsvd(const SymMatrix<Real>& a, Index r) {
  require(r >= 1 && r <= a.n(), Errc::RankOutOfRange, "rank out of range");
  Eigen::SelfAdjointEigenSolver<Matrix<Real>> es(a.mat());
  require(es.info() == Eigen::Success, Errc::NonFiniteInput, "eigendecomposition failed");
  TsvdApprox<Real> t;
  t.rank = r;
  t.left.resize(a.n(), r);
  t.singvals.resize(r);
  for (Index i = 0; i < r; ++i) {
    t.singvals(i) = std::max(es.eigenvalues()(a.n() - 1 - i), Real(0));
    t.left.col(i) = es.eigenvectors().col(a.n() - 1 - i);
  }
  return t;
}

template <class Real>
Matrix<Real> tsvd_densify(const TsvdApprox<Real>& t) {
  return t.left * t.singvals.asDiagonal() * t.left.transpose();
}

// Full symmetric spectrum, descending (values only; cheaper than tsvd when no
// vectors are needed).
template <class Real>
Vector<Real> sym_spectrum(const SymMatrix<Real>& a) {
  Eigen::SelfAdjointEigenSolver<Matrix<Real>> es(a.mat(), Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, Errc::NonFiniteInput, "eigendecomposition failed");
  return es.eigenvalues().reverse();
}

// Rows of B solve min ||x R_eps - c|| for the corresponding (perm-applied)
// rows c of C, via Householder QR of R_eps^T. Never forms normal equations:
// R_eps can carry condition numbers near 1/epsilon and the squared system
// would lose half the digits exactly where the truncation is supposed to
// rescue them.
template <class Real>
Matrix<Real> lsq_min_norm(const Matrix<Real>& c, const TruncCholFactor<Real>& f) {
  require(c.cols() == f.r, Errc::DimensionMismatch,
          "C column count does not match the factor order");
  require(c.allFinite(), Errc::NonFiniteInput, "matrix has non-finite entries");
  if (f.r_hat == 0) return Matrix<Real>::Zero(c.rows(), 0);
  Matrix<Real> cp(c.rows(), f.r);
  for (Index k = 0; k < f.r; ++k) cp.col(k) = c.col(f.perm[static_cast<std::size_t>(k)]);
  Eigen::HouseholderQR<Matrix<Real>> qr(f.rows.transpose());
  return qr.solve(cp.transpose()).transpose();
}

// Power-iteration lower estimate of ||A||_2 for symmetric A. The iterates are
// Rayleigh quotients of A^2, so the sequence is nondecreasing and never
// exceeds the true norm; the start vector comes from the counter-based
// stream, making the estimate a pure function of (A, iters, seed).
template <class Real>
Real spectral_norm_est(const SymMatrix<Real>& a, int iters = 50, std::uint64_t seed = 0) {
  require(iters >= 1, Errc::ParamOutOfRange, "iteration count must be positive");
  const Index n = a.n();
  CounterRng g(seed);
  Vector<Real> v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = static_cast<Real>(g.normal(static_cast<std::uint64_t>(i)));
  Real vn = v.norm();
  if (vn == Real(0)) v(0) = Real(1); else v /= vn;
  Real est = Real(0);
  for (int it = 0; it < iters; ++it) {
    Vector<Real> w = a.mat() * v;
    const Real wn = w.norm();
    if (wn == Real(0)) return Real(0);
    est = wn;
    v = w / wn;
  }
  return est;
}

enum class NormKind { frobenius, spectral, max };

// ||A - Ahat|| / ||A|| in the requested norm; 0/0 is defined as 0. The
// spectral norm is exact (symmetric eigensolve), not an estimate.
template <class Real>
Real rel_err(const SymMatrix<Real>& a, const SymMatrix<Real>& ahat, NormKind norm) {
  require(a.n() == ahat.n(), Errc::DimensionMismatch, "size mismatch");
  Real num = Real(0), den = Real(0);
  switch (norm) {
    case NormKind::frobenius:
      num = (a.mat() - ahat.mat()).norm();
      den = a.mat().norm();
      break;
    case NormKind::spectral: {
      Eigen::SelfAdjointEigenSolver<Matrix<Real>> ed(a.mat() - ahat.mat(),
                                                     Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Matrix<Real>> ea(a.mat(), Eigen::EigenvaluesOnly);
      num = ed.eigenvalues().cwiseAbs().maxCoeff();
      den = ea.eigenvalues().cwiseAbs().maxCoeff();
      break;
    }
    case NormKind::max:
      num = (a.mat() - ahat.mat()).cwiseAbs().maxCoeff();
      den = a.mat().cwiseAbs().maxCoeff();
      break;
  }
  if (den == Real(0)) return num == Real(0) ? Real(0) : std::numeric_limits<Real>::infinity();
  return num / den;
}

}  // namespace nystab
