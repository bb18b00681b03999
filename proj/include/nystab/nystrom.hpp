#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "nystab/colselect.hpp"
#include "nystab/dense_core.hpp"
#include "nystab/types.hpp"

namespace nystab {

enum class Variant { plain, stabilized, shifted, direct_solve, pinv };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::plain: return "plain";
    case Variant::stabilized: return "stabilized";
    case Variant::shifted: return "shifted";
    case Variant::direct_solve: return "direct_solve";
    case Variant::pinv: return "pinv";
  }
  return "?";
}

// Factored Nystrom approximation A ~ B B^T.
template <class Real>
struct NystromFactor {
  Matrix<Real> b;  // n x r_hat
  Variant variant = Variant::plain;
  IndexSet j;
  Real epsilon = Real(0);  // truncation threshold or shift, 0 for plain
  Index r_hat = 0;
};

template <class Real>
SymMatrix<Real> densify(const NystromFactor<Real>& f) {
  return SymMatrix<Real>(f.b * f.b.transpose(), true);
}

// A(:,J) (A(J,J))^-1 A(J,:) through an unpivoted Cholesky of A(J,J) and a
// triangular solve. Breakdown (nonpositive pivot) propagates: hiding it is
// exactly the failure mode this code base exists to expose.
template <class Real>
NystromFactor<Real> nystrom_plain(const SymMatrix<Real>& a, const IndexSet& j) {
  const Matrix<Real> c = columns(a, j);
  const Matrix<Real> w = principal(a, j);
  const Matrix<Real> rfac = unpivoted_cholesky(w);
  NystromFactor<Real> f;
  f.b = rfac.template triangularView<Eigen::Upper>().template solve<Eigen::OnTheRight>(c);
  f.variant = Variant::plain;
  f.j = j;
  f.r_hat = j.r();
  require(f.b.allFinite(), Errc::NonFiniteInput, "plain Nystrom produced non-finite factor");
  return f;
}

// Stabilized route: epsilon-truncated pivoted Cholesky of A(J,J), then a
// QR-based least-squares solve for B = A(:,J) R_eps^dagger.
template <class Real>
NystromFactor<Real> nystrom_stabilized(const SymMatrix<Real>& a, const IndexSet& j,
                                       Real epsilon) {
  const Matrix<Real> c = columns(a, j);
  const SymMatrix<Real> w(principal(a, j), a.psd_hint());
  const TruncCholFactor<Real> fac = pivoted_cholesky_trunc(w, epsilon);
  NystromFactor<Real> f;
  f.b = lsq_min_norm(c, fac);
  f.variant = Variant::stabilized;
  f.j = j;
  f.epsilon = epsilon;
  f.r_hat = fac.r_hat;
  require(f.b.allFinite(), Errc::NonFiniteInput,
          "stabilized Nystrom produced non-finite factor");
  return f;
}

// Same contract through the definitional eigenvalue truncation of A(J,J);
// the fallback when the Cholesky route reports NegativePivotDominant.
template <class Real>
NystromFactor<Real> nystrom_stabilized_eig(const SymMatrix<Real>& a, const IndexSet& j,
                                           Real epsilon) {
  const Matrix<Real> c = columns(a, j);
  const SymMatrix<Real> w(principal(a, j), a.psd_hint());
  const EigTruncFactor<Real> et = eig_truncate(w, epsilon);
  NystromFactor<Real> f;
  f.b.resize(a.n(), et.r_hat);
  for (Index k = 0; k < et.r_hat; ++k)
    f.b.col(k) = (c * et.evecs.col(k)) / std::sqrt(et.evals(k));
  f.variant = Variant::stabilized;
  f.j = j;
  f.epsilon = epsilon;
  f.r_hat = et.r_hat;
  require(f.b.allFinite(), Errc::NonFiniteInput,
          "stabilized Nystrom produced non-finite factor");
  return f;
}

// Shifted recipe: add nu to the sampled rows, factor the shifted core, then
// remove the shift from the squared singular values.
//   C_nu = C + nu S,  W_nu = symmetrized C_nu(J,:),  R^T R = W_nu,
//   F = C_nu R^-1 = U Sigma V^T,  lambda = max(Sigma^2 - nu, 0),
//   B = U sqrt(lambda).
template <class Real>
NystromFactor<Real> nystrom_shifted(const SymMatrix<Real>& a, const IndexSet& j, Real nu) {
  require(std::isfinite(static_cast<double>(nu)) && nu >= Real(0), Errc::ParamOutOfRange,
          "shift must be finite and nonnegative");
  Matrix<Real> c = columns(a, j);
  for (Index k = 0; k < j.r(); ++k) c(j.idx[static_cast<std::size_t>(k)], k) += nu;
  Matrix<Real> w(j.r(), j.r());
  for (Index i = 0; i < j.r(); ++i) w.row(i) = c.row(j.idx[static_cast<std::size_t>(i)]);
  w = ((w + w.transpose()) * Real(0.5)).eval();
  const Matrix<Real> rfac = unpivoted_cholesky(w);
  const Matrix<Real> fmat =
      rfac.template triangularView<Eigen::Upper>().template solve<Eigen::OnTheRight>(c);
  Eigen::BDCSVD<Matrix<Real>> svd(fmat, Eigen::ComputeThinU);
  Index kept = 0;
  for (Index i = 0; i < svd.singularValues().size(); ++i) {
    const Real s2 = svd.singularValues()(i) * svd.singularValues()(i);
    if (s2 - nu > Real(0)) ++kept;
  }
  NystromFactor<Real> f;
  f.b.resize(a.n(), kept);
  for (Index i = 0; i < kept; ++i) {
    const Real s2 = svd.singularValues()(i) * svd.singularValues()(i);
    f.b.col(i) = svd.matrixU().col(i) * std::sqrt(s2 - nu);
  }
  f.variant = Variant::shifted;
  f.j = j;
  f.epsilon = nu;
  f.r_hat = kept;
  require(f.b.allFinite(), Errc::NonFiniteInput, "shifted Nystrom produced non-finite factor");
  return f;
}

// Backslash-style route: A(:,J) X with X solving A(J,J) X = A(J,:), through a
// pivoted LDL^T without any truncation. Matches what "W \ C'" does in array
// languages; accuracy on near-singular cores is whatever it is; only exact
// singularity is reported.
template <class Real>
SymMatrix<Real> nystrom_direct_solve(const SymMatrix<Real>& a, const IndexSet& j) {
  const Matrix<Real> c = columns(a, j);
  const Matrix<Real> w = principal(a, j);
  Eigen::LDLT<Matrix<Real>> ldlt(w);
  require(ldlt.info() == Eigen::Success, Errc::SolverSingular, "LDL^T factorization failed");
  for (Index i = 0; i < j.r(); ++i)
    require(ldlt.vectorD()(i) != Real(0), Errc::SolverSingular, "A(J,J) is exactly singular");
  const Matrix<Real> x = ldlt.solve(c.transpose());
  Matrix<Real> ahat = c * x;
  require(ahat.allFinite(), Errc::NonFiniteInput,
          "direct-solve Nystrom produced non-finite entries");
  return SymMatrix<Real>(std::move(ahat), true);
}

// Explicit pseudoinverse route: eigendecompose A(J,J), invert eigenvalues
// with |lambda| > tol (default r u sigma_max, the conventional cutoff), form
// the r x r pseudoinverse densely, and multiply out. Deliberately literal:
// this reproduces pinv-based reference implementations, including their
// instability when near-cutoff eigenvalues are retained. `kept_out`, when
// given, receives the number of inverted eigenvalues.
template <class Real>
SymMatrix<Real> nystrom_pinv(const SymMatrix<Real>& a, const IndexSet& j,
                             Real tol = Real(-1), Index* kept_out = nullptr) {
  const Matrix<Real> c = columns(a, j);
  const SymMatrix<Real> w(principal(a, j), a.psd_hint());
  Eigen::SelfAdjointEigenSolver<Matrix<Real>> es(w.mat());
  require(es.info() == Eigen::Success, Errc::NonFiniteInput, "eigendecomposition failed");
  const Real sigma_max = es.eigenvalues().cwiseAbs().maxCoeff();
  if (tol < Real(0)) tol = Real(j.r()) * unit_roundoff<Real>() * sigma_max;
  Vector<Real> inv = Vector<Real>::Zero(j.r());
  Index kept = 0;
  for (Index i = 0; i < j.r(); ++i)
    if (std::abs(es.eigenvalues()(i)) > tol) {
      inv(i) = Real(1) / es.eigenvalues()(i);
      ++kept;
    }
  if (kept_out != nullptr) *kept_out = kept;
  const Matrix<Real> wdag =
      es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  Matrix<Real> ahat = c * wdag * c.transpose();
  require(ahat.allFinite(), Errc::NonFiniteInput,
          "pinv Nystrom produced non-finite entries");
  return SymMatrix<Real>(std::move(ahat), true);
}

// Error summary of an approximation against the exact truncated-eigenvalue
// baseline at the approximation's effective rank.
struct ErrorReport {
  double rel_frob = 0;
  double rel_spectral = 0;
  double rel_max = 0;
  double tsvd_rel_frob = 0;   // baseline error at rank r_hat
  double ratio_to_tsvd = 0;   // rel_frob / tsvd_rel_frob; 1 when both are 0
  double apriori_bound = 0;   // n^2 r (r+1) sigma_{r+1} + 2 n r epsilon
  bool apriori_bound_valid = false;
};

namespace detail {

// Baseline || A - [A]_k ||_F / ||A||_F from a full descending spectrum.
template <class Real>
double tsvd_baseline(const Vector<Real>& spectrum, Index k, Real frob_norm) {
  Real tail = Real(0);
  for (Index i = k; i < spectrum.size(); ++i) tail += spectrum(i) * spectrum(i);
  if (frob_norm == Real(0)) return 0.0;
  return static_cast<double>(std::sqrt(tail) / frob_norm);
}

inline double tsvd_ratio(double rel_frob, double baseline) {
  if (baseline == 0.0)
    return rel_frob == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return rel_frob / baseline;
}

}  // namespace detail

// `spectrum` (descending eigenvalues of A, full length) is optional; without
// it a full eigendecomposition runs here. `rank_for_baseline` fixes the
// truncation rank of the baseline. `epsilon`/`sample_size` feed the spectral
// a-priori bound; sample_size <= 0 disables it.
template <class Real>
ErrorReport error_report(const SymMatrix<Real>& a, const SymMatrix<Real>& approx,
                         Index rank_for_baseline, const Vector<Real>* spectrum = nullptr,
                         Real epsilon = Real(0), Index sample_size = 0) {
  require(rank_for_baseline >= 0 && rank_for_baseline <= a.n(), Errc::RankOutOfRange,
          "baseline rank out of range");
  Vector<Real> owned;
  if (spectrum == nullptr) {
    owned = sym_spectrum(a);
    spectrum = &owned;
  }
  require(spectrum->size() == a.n(), Errc::DimensionMismatch,
          "spectrum must cover the full matrix");
  ErrorReport rep;
  rep.rel_frob = static_cast<double>(rel_err(a, approx, NormKind::frobenius));
  rep.rel_spectral = static_cast<double>(rel_err(a, approx, NormKind::spectral));
  rep.rel_max = static_cast<double>(rel_err(a, approx, NormKind::max));
  rep.tsvd_rel_frob = detail::tsvd_baseline(*spectrum, rank_for_baseline, a.mat().norm());
  rep.ratio_to_tsvd = detail::tsvd_ratio(rep.rel_frob, rep.tsvd_rel_frob);
  if (sample_size > 0 && sample_size <= a.n()) {
    const double n = static_cast<double>(a.n()), r = static_cast<double>(sample_size);
    const double sigma_next =
        sample_size < a.n() ? static_cast<double>((*spectrum)(sample_size)) : 0.0;
    rep.apriori_bound = n * n * r * (r + 1) * sigma_next +
                        2 * n * r * static_cast<double>(epsilon);
    rep.apriori_bound_valid = true;
  }
  return rep;
}

template <class Real>
ErrorReport error_report(const SymMatrix<Real>& a, const NystromFactor<Real>& f,
                         const Vector<Real>* spectrum = nullptr) {
  return error_report(a, densify(f), f.r_hat, spectrum, f.epsilon, f.j.r());
}

}  // namespace nystab
