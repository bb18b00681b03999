#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nystab/types.hpp"

namespace nystab {

// Dense dataset: one row per point. Labels are optional (generators produce
// none, LIBSVM files always carry them).
struct Dataset {
  Matrix<double> points;
  std::optional<Vector<double>> labels;
  std::string name;

  Index n() const { return points.rows(); }
  Index d() const { return points.cols(); }
};

// LIBSVM text format: `label idx:val idx:val ...` with 1-based strictly
// increasing indices per line. The feature count is the largest index seen.
Dataset parse_libsvm(std::istream& in);

// Inverse of parse_libsvm: emits nonzero entries with shortest round-trip
// number formatting, so parse(serialize(ds)) reproduces values exactly.
void serialize_libsvm(const Dataset& ds, std::ostream& out);

struct StandardizeResult {
  Dataset data;
  std::vector<Index> zero_variance_features;  // left as all-zero columns
};

// Per-feature shift to mean 0 and scale to variance 1 (population variance,
// i.e. divide by n). Zero-variance features become all zeros and are listed.
StandardizeResult standardize(const Dataset& ds);

// m distinct rows chosen uniformly without replacement (counter-based stream),
// original row order preserved.
Dataset subsample(const Dataset& ds, Index m, std::uint64_t seed);

struct KernelSpec {
  double bandwidth = 1.0;  // sigma in exp(-||x_i - x_j||^2 / (2 sigma^2))
};

// Gaussian RBF kernel matrix. Each unordered pair is computed once from the
// explicit coordinate difference (no ||x||^2 cross-term expansion), so the
// result is exactly symmetric with a unit diagonal.
SymMatrix<double> rbf_kernel(const Dataset& ds, const KernelSpec& spec);

// Sparse-factor synthetic test matrix (1000 x 1000):
//   sum_{j=1}^{500} w_j x_j x_j^T,  w_j = 1/j (j <= 150), 1e-5/j (j <= 350),
//   1e-10/j otherwise, with x_j sparse standard-normal of density 0.01.
// Bit-reproducible for a given seed via the documented counter mappings.
SymMatrix<double> gen_snn(std::uint64_t seed);

// diag(1, gamma^2, 0) for gamma in (0, 1]: exactly representable, exactly
// singular, the minimal case separating naive and stabilized downdating.
SymMatrix<double> gen_diag_counterexample(double gamma);

// Q diag(singvals, 0, ...) Q^T with Haar-distributed Q (QR of a seeded
// Gaussian matrix, sign-fixed so diag(R) >= 0). singvals must be
// nonincreasing, nonnegative, length in [1, n].
SymMatrix<double> gen_spsd_spectrum(Index n, const std::vector<double>& singvals,
                                    std::uint64_t seed);

}  // namespace nystab
