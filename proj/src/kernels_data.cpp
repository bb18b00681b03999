#include "nystab/kernels_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>

#include "nystab/errors.hpp"
#include "nystab/rng.hpp"

namespace nystab {

namespace {

bool parse_double(const std::string& tok, double& out) {
  const char* s = tok.c_str();
  char* end = nullptr;
  out = std::strtod(s, &end);
  return end == s + tok.size() && std::isfinite(out);
}

std::string format_shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset parse_libsvm(std::istream& in) {
  struct Entry {
    long index;  // 1-based
    double value;
  };
  std::vector<double> labels;
  std::vector<std::vector<Entry>> rows;
  long dmax = 0;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char ch) { return std::isspace(ch); }))
      continue;

    std::vector<Entry> row;
    std::size_t pos = 0;
    bool have_label = false;
    long prev_index = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      const std::string tok = line.substr(pos, end - pos);
      pos = end;

      if (!have_label) {
        double lab;
        require(parse_double(tok, lab), Errc::MalformedLine,
                "line " + std::to_string(line_no) + ": bad label '" + tok + "'");
        labels.push_back(lab);
        have_label = true;
        continue;
      }
      const std::size_t colon = tok.find(':');
      require(colon != std::string::npos, Errc::MalformedLine,
              "line " + std::to_string(line_no) + ": expected idx:val, got '" + tok + "'");
      double idx_d, val;
      require(parse_double(tok.substr(0, colon), idx_d) && idx_d == std::floor(idx_d) &&
                  idx_d >= 1,
              Errc::MalformedLine,
              "line " + std::to_string(line_no) + ": bad feature index in '" + tok + "'");
      require(parse_double(tok.substr(colon + 1), val), Errc::MalformedLine,
              "line " + std::to_string(line_no) + ": bad feature value in '" + tok + "'");
      const long idx = static_cast<long>(idx_d);
      require(idx > prev_index, Errc::MalformedLine,
              "line " + std::to_string(line_no) + ": indices must be strictly increasing");
      prev_index = idx;
      dmax = std::max(dmax, idx);
      row.push_back({idx, val});
    }
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), Errc::EmptyInput, "no data lines");
  require(dmax >= 1, Errc::EmptyInput, "no features in any line");

  Dataset ds;
  ds.points = Matrix<double>::Zero(static_cast<Index>(rows.size()), dmax);
  ds.labels = Vector<double>(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    (*ds.labels)(static_cast<Index>(i)) = labels[i];
    for (const auto& e : rows[i])
      ds.points(static_cast<Index>(i), e.index - 1) = e.value;
  }
  return ds;
}

void serialize_libsvm(const Dataset& ds, std::ostream& out) {
  require(ds.n() >= 1, Errc::EmptyInput, "empty dataset");
  for (Index i = 0; i < ds.n(); ++i) {
    out << format_shortest(ds.labels ? (*ds.labels)(i) : 0.0);
    for (Index j = 0; j < ds.d(); ++j) {
      const double v = ds.points(i, j);
      if (v != 0.0) out << ' ' << (j + 1) << ':' << format_shortest(v);
    }
    out << '\n';
  }
  require(out.good(), Errc::IoError, "write failed");
}

StandardizeResult standardize(const Dataset& ds) {
  require(ds.n() >= 1 && ds.d() >= 1, Errc::EmptyInput, "empty dataset");
  require(ds.points.allFinite(), Errc::NonFiniteInput, "dataset has non-finite entries");
  StandardizeResult res;
  res.data = ds;
  const auto n = static_cast<double>(ds.n());
  for (Index j = 0; j < ds.d(); ++j) {
    const double mean = ds.points.col(j).mean();
    const double var = (ds.points.col(j).array() - mean).square().sum() / n;
    // A constant column leaves variance at rounding level relative to its
    // mean square; treat that as zero rather than dividing by noise.
    const double mean_sq = ds.points.col(j).array().square().sum() / n;
    const double u = unit_roundoff<double>();
    if (var <= 16.0 * u * u * mean_sq || var == 0.0) {
      res.data.points.col(j).setZero();
      res.zero_variance_features.push_back(j);
    } else {
      res.data.points.col(j) = (ds.points.col(j).array() - mean) / std::sqrt(var);
    }
  }
  return res;
}

Dataset subsample(const Dataset& ds, Index m, std::uint64_t seed) {
  require(ds.n() >= 1, Errc::EmptyInput, "empty dataset");
  require(m >= 1 && m <= ds.n(), Errc::CountOutOfRange, "sample size out of range");
  std::vector<long> pick = sample_without_replacement(seed, ds.n(), m);
  std::sort(pick.begin(), pick.end());
  Dataset out;
  out.name = ds.name;
  out.points.resize(m, ds.d());
  if (ds.labels) out.labels = Vector<double>(m);
  for (Index i = 0; i < m; ++i) {
    out.points.row(i) = ds.points.row(pick[static_cast<std::size_t>(i)]);
    if (ds.labels) (*out.labels)(i) = (*ds.labels)(pick[static_cast<std::size_t>(i)]);
  }
  return out;
}

SymMatrix<double> rbf_kernel(const Dataset& ds, const KernelSpec& spec) {
  require(std::isfinite(spec.bandwidth) && spec.bandwidth > 0, Errc::ParamOutOfRange,
          "bandwidth must be positive");
  require(ds.n() >= 1 && ds.d() >= 1, Errc::EmptyInput, "empty dataset");
  require(ds.points.allFinite(), Errc::NonFiniteInput, "dataset has non-finite entries");
  const Index n = ds.n();
  const double denom = 2.0 * spec.bandwidth * spec.bandwidth;
  Matrix<double> k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double d2 = (ds.points.row(i) - ds.points.row(j)).squaredNorm();
      const double v = std::exp(-d2 / denom);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return SymMatrix<double>(std::move(k), true);
}

SymMatrix<double> gen_snn(std::uint64_t seed) {
  constexpr Index n = 1000;
  constexpr Index terms = 500;
  constexpr double density = 0.01;
  const CounterRng parent(seed);
  const CounterRng mask_rng(parent.u64(0));
  const CounterRng val_rng(parent.u64(1));

  Matrix<double> a = Matrix<double>::Zero(n, n);
  std::vector<Index> support;
  std::vector<double> values;
  for (Index t = 0; t < terms; ++t) {
    const long j1 = static_cast<long>(t) + 1;  // 1-based term index
    const double w = j1 <= 150 ? 1.0 / j1 : (j1 <= 350 ? 1e-5 / j1 : 1e-10 / j1);
    support.clear();
    values.clear();
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::uint64_t>(t) * n + static_cast<std::uint64_t>(i);
      if (mask_rng.unit(k) < density) {
        support.push_back(i);
        values.push_back(val_rng.normal(k));
      }
    }
    for (std::size_t p = 0; p < support.size(); ++p)
      for (std::size_t q = 0; q < support.size(); ++q)
        a(support[p], support[q]) += w * values[p] * values[q];
  }
  return SymMatrix<double>(std::move(a), true);
}

SymMatrix<double> gen_diag_counterexample(double gamma) {
  require(std::isfinite(gamma) && gamma > 0 && gamma <= 1, Errc::ParamOutOfRange,
          "gamma must be in (0, 1]");
  Matrix<double> a = Matrix<double>::Zero(3, 3);
  a(0, 0) = 1.0;
  a(1, 1) = gamma * gamma;
  return SymMatrix<double>(std::move(a), true);
}

SymMatrix<double> gen_spsd_spectrum(Index n, const std::vector<double>& singvals,
                                    std::uint64_t seed) {
  require(n >= 1 && n <= 3000, Errc::ParamOutOfRange, "n out of the supported dense range");
  require(!singvals.empty() && static_cast<Index>(singvals.size()) <= n, Errc::SpecInvalid,
          "need between 1 and n singular values");
  for (std::size_t i = 0; i < singvals.size(); ++i) {
    require(std::isfinite(singvals[i]) && singvals[i] >= 0, Errc::SpecInvalid,
            "singular values must be finite and nonnegative");
    require(i == 0 || singvals[i] <= singvals[i - 1], Errc::SpecInvalid,
            "singular values must be nonincreasing");
  }
  const CounterRng g(seed);
  Matrix<double> gauss(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      gauss(i, j) = g.normal(static_cast<std::uint64_t>(i) * n + static_cast<std::uint64_t>(j));
  Eigen::HouseholderQR<Matrix<double>> qr(gauss);
  Matrix<double> q = qr.householderQ() * Matrix<double>::Identity(n, n);
  const Matrix<double> rdiag = qr.matrixQR();
  for (Index j = 0; j < n; ++j)
    if (rdiag(j, j) < 0) q.col(j) = -q.col(j);

  Vector<double> lam = Vector<double>::Zero(n);
  for (std::size_t i = 0; i < singvals.size(); ++i) lam(static_cast<Index>(i)) = singvals[i];
  Matrix<double> a = q * lam.asDiagonal() * q.transpose();
  return SymMatrix<double>(std::move(a), true);
}

}  // namespace nystab
