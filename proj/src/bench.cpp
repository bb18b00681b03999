#include "nystab/bench.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>

#include "nystab/colselect.hpp"
#include "nystab/dense_core.hpp"
#include "nystab/errors.hpp"

namespace nystab {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(trim(std::string_view(s).substr(start)));
      break;
    }
    parts.push_back(trim(std::string_view(s).substr(start, pos - start)));
    start = pos + 1;
  }
  return parts;
}

double to_double(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(!s.empty() && end == s.c_str() + s.size() && errno == 0 && std::isfinite(v),
          Errc::ConfigInvalid, what + ": bad number '" + s + "'");
  return v;
}

long long to_int(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), Errc::ConfigInvalid,
          what + ": bad integer '" + s + "'");
  return v;
}

std::uint64_t to_seed(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), Errc::ConfigInvalid,
          what + ": bad seed '" + s + "'");
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  const auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double, std::milli>(dt).count();
}

// Threshold or shift text: "10u" or a nonnegative number.
ThresholdRule parse_threshold(const std::string& s, const std::string& what) {
  ThresholdRule rule;
  if (s == "10u") {
    rule.ten_u_norm = true;
    return rule;
  }
  rule.ten_u_norm = false;
  rule.fixed = to_double(s, what);
  require(rule.fixed >= 0, Errc::ConfigInvalid, what + ": must be nonnegative");
  return rule;
}

SelectorKind parse_selector(const std::string& s) {
  if (s == "greedy") return SelectorKind::greedy;
  if (s == "qrcp") return SelectorKind::qrcp;
  if (s == "uniform") return SelectorKind::uniform;
  if (s == "refined") return SelectorKind::refined;
  raise(Errc::ConfigInvalid, "unknown selector '" + s + "'");
}

Variant parse_variant(const std::string& s) {
  if (s == "plain") return Variant::plain;
  if (s == "stabilized") return Variant::stabilized;
  if (s == "shifted") return Variant::shifted;
  if (s == "direct_solve") return Variant::direct_solve;
  if (s == "pinv") return Variant::pinv;
  raise(Errc::ConfigInvalid, "unknown variant '" + s + "'");
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const std::string& tok : split(s, ',')) out.push_back(to_double(tok, what));
  return out;
}

template <class Real>
std::vector<SweepRecord> run_sweep_impl(const ExperimentConfig& cfg,
                                        const SymMatrix<double>& a64) {
  const SymMatrix<Real> a = sym_cast<Real>(a64);
  const Index n = a.n();
  for (Index r : cfg.ranks)
    require(r >= 1 && r <= n, Errc::ConfigInvalid,
            "rank " + std::to_string(r) + " outside [1, " + std::to_string(n) + "]");

  // One eigendecomposition per matrix: the truncation baseline for every
  // record and the norm behind the 10u rule both come from here.
  const Vector<Real> spectrum = sym_spectrum(a);
  const Real frob = a.mat().norm();
  const Real norm2 = std::max(std::abs(spectrum(0)), std::abs(spectrum(n - 1)));
  const Real u = unit_roundoff<Real>();
  const Real eps = cfg.epsilon.ten_u_norm ? Real(10) * u * norm2
                                          : static_cast<Real>(cfg.epsilon.fixed);
  const Real nu = cfg.shift.ten_u_norm ? Real(10) * u * norm2
                                       : static_cast<Real>(cfg.shift.fixed);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  const auto ratio = [&](Real num, Real den) -> double {
    if (num == Real(0)) return 0.0;
    if (den == Real(0)) return inf;
    return static_cast<double>(num / den);
  };

  std::vector<SweepRecord> out;
  out.reserve(cfg.ranks.size() * cfg.variants.size());

  for (Index r : cfg.ranks) {
    IndexSet j;
    bool have_j = false;
    try {
      switch (cfg.selector) {
        case SelectorKind::greedy: j = greedy_pivot_select(a, r); break;
        case SelectorKind::qrcp: j = qrcp_select(a, r); break;
        case SelectorKind::uniform: j = uniform_select(n, r, cfg.seed); break;
        case SelectorKind::refined: j = refined_select(a, r); break;
      }
      have_j = j.r() >= 1;
    } catch (const Error&) {
      have_j = false;
    }

    double sigma_min = nan;
    if (have_j) {
      try {
        const ThinQR<Real> qr = thin_qr(columns(a, j));
        if (!qr.rank_deficient) {
          Matrix<Real> sq(j.r(), j.r());
          for (Index i = 0; i < j.r(); ++i)
            sq.row(i) = qr.q.row(j.idx[static_cast<std::size_t>(i)]);
          Eigen::BDCSVD<Matrix<Real>> svd(sq);
          sigma_min = static_cast<double>(svd.singularValues()(j.r() - 1));
        }
      } catch (const Error&) {
      }
    }

    for (Variant v : cfg.variants) {
      SweepRecord rec;
      rec.rank = r;
      rec.variant = variant_name(v);
      rec.selector = selector_name(cfg.selector);
      rec.sigma_min_sq = sigma_min;
      rec.rel_frob = rec.rel_spectral = rec.tsvd_rel_frob = nan;
      rec.r_hat = 0;
      rec.status = "breakdown";
      double ms = 0;
      if (have_j) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          Matrix<Real> approx;
          Index rhat = 0;
          switch (v) {
            case Variant::plain: {
              const NystromFactor<Real> f = nystrom_plain(a, j);
              rhat = f.r_hat;
              approx = densify(f).mat();
            } break;
            case Variant::stabilized: {
              const NystromFactor<Real> f = nystrom_stabilized(a, j, eps);
              rhat = f.r_hat;
              approx = densify(f).mat();
            } break;
            case Variant::shifted: {
              const NystromFactor<Real> f = nystrom_shifted(a, j, nu);
              rhat = f.r_hat;
              approx = densify(f).mat();
            } break;
            case Variant::direct_solve: {
              approx = nystrom_direct_solve(a, j).mat();
              rhat = j.r();
            } break;
            case Variant::pinv: {
              Index kept = 0;
              approx = nystrom_pinv(a, j, Real(-1), &kept).mat();
              rhat = kept;
            } break;
          }
          ms = elapsed_ms(t0);
          const SymMatrix<Real> diff(a.mat() - approx);
          rec.rel_frob = ratio(diff.mat().norm(), frob);
          rec.rel_spectral = ratio(spectral_norm_est(diff, 60, cfg.seed), norm2);
          rec.tsvd_rel_frob = detail::tsvd_baseline(spectrum, rhat, frob);
          rec.r_hat = rhat;
          rec.status = "ok";
        } catch (const Error& e) {
          ms = elapsed_ms(t0);
          rec.status = e.code() == Errc::NonFiniteInput ? "unstable_flag" : "breakdown";
          rec.rel_frob = rec.rel_spectral = rec.tsvd_rel_frob = nan;
          rec.r_hat = 0;
        }
      }
      rec.wall_time_ms = cfg.timing ? ms : 0.0;
      out.push_back(std::move(rec));
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const SweepRecord& x, const SweepRecord& y) {
    if (x.rank != y.rank) return x.rank < y.rank;
    return x.variant < y.variant;
  });
  return out;
}

}  // namespace

SymMatrix<double> build_matrix(const MatrixSource& src, std::uint64_t seed) {
  switch (src.kind) {
    case MatrixSourceKind::snn:
      return gen_snn(seed);
    case MatrixSourceKind::diag_counterexample:
      return gen_diag_counterexample(src.gamma);
    case MatrixSourceKind::spsd_spectrum: {
      require(src.n >= 1, Errc::ConfigInvalid, "matrix size must be positive");
      std::vector<double> sv;
      if (src.spectrum_family == "geometric") {
        require(src.decay > 0 && src.decay <= 1, Errc::ConfigInvalid,
                "geometric decay must be in (0, 1]");
        sv.resize(static_cast<std::size_t>(src.n));
        for (Index i = 0; i < src.n; ++i)
          sv[static_cast<std::size_t>(i)] = std::pow(src.decay, static_cast<double>(i));
      } else if (src.spectrum_family == "algebraic") {
        require(src.decay > 0, Errc::ConfigInvalid, "algebraic decay must be positive");
        sv.resize(static_cast<std::size_t>(src.n));
        for (Index i = 0; i < src.n; ++i)
          sv[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), -src.decay);
      } else if (src.spectrum_family == "bands") {
        require(!src.band_levels.empty() && src.band_levels.size() == src.band_counts.size(),
                Errc::ConfigInvalid, "bands need matching levels and counts");
        for (std::size_t k = 0; k < src.band_levels.size(); ++k) {
          require(src.band_counts[k] >= 1, Errc::ConfigInvalid, "band counts must be positive");
          require(src.band_levels[k] >= 0, Errc::ConfigInvalid, "band levels must be >= 0");
          require(k == 0 || src.band_levels[k] <= src.band_levels[k - 1], Errc::ConfigInvalid,
                  "band levels must be nonincreasing");
          for (Index c = 0; c < src.band_counts[k]; ++c) sv.push_back(src.band_levels[k]);
        }
        require(static_cast<Index>(sv.size()) <= src.n, Errc::ConfigInvalid,
                "band counts exceed matrix size");
      } else {
        raise(Errc::ConfigInvalid, "unknown spectrum family '" + src.spectrum_family + "'");
      }
      return gen_spsd_spectrum(src.n, sv, seed);
    }
    case MatrixSourceKind::kernel: {
      require(!src.dataset_path.empty(), Errc::ConfigInvalid, "kernel source needs a dataset path");
      std::ifstream in(src.dataset_path);
      require(in.good(), Errc::MatrixSourceUnavailable,
              "cannot open dataset '" + src.dataset_path + "'");
      Dataset ds = standardize(parse_libsvm(in)).data;
      if (src.subsample_to > 0 && src.subsample_to < ds.n())
        ds = subsample(ds, src.subsample_to, seed);
      KernelSpec ks;
      ks.bandwidth = src.sigma_thirty_sqrt_d ? 30.0 * std::sqrt(static_cast<double>(ds.d()))
                                             : src.sigma;
      return rbf_kernel(ds, ks);
    }
  }
  raise(Errc::ConfigInvalid, "unknown matrix source");
}

std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg) {
  require(!cfg.ranks.empty(), Errc::ConfigInvalid, "no ranks to sweep");
  require(!cfg.variants.empty(), Errc::ConfigInvalid, "no variants to run");
  for (std::size_t i = 0; i < cfg.variants.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.variants.size(); ++k)
      require(cfg.variants[i] != cfg.variants[k], Errc::ConfigInvalid,
              "variant listed twice");
  const SymMatrix<double> a = build_matrix(cfg.source, cfg.seed);
  if (cfg.precision == PrecisionKind::single32) return run_sweep_impl<float>(cfg, a);
  return run_sweep_impl<double>(cfg, a);
}

void emit_csv(const std::vector<SweepRecord>& records, std::ostream& out) {
  require(!records.empty(), Errc::EmptyInput, "no records to emit");
  out << "rank,variant,selector,rel_frob,rel_spectral,tsvd_rel_frob,r_hat,sigma_min_sq,"
         "wall_time_ms,status\n";
  for (const SweepRecord& r : records) {
    out << r.rank << ',' << r.variant << ',' << r.selector << ',' << format_double(r.rel_frob)
        << ',' << format_double(r.rel_spectral) << ',' << format_double(r.tsvd_rel_frob) << ','
        << r.r_hat << ',' << format_double(r.sigma_min_sq) << ','
        << format_double(r.wall_time_ms) << ',' << r.status << '\n';
  }
  require(out.good(), Errc::IoError, "write failed");
}

void emit_csv_file(const std::vector<SweepRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::IoError, "cannot open '" + path + "' for writing");
  emit_csv(records, out);
  out.flush();
  require(out.good(), Errc::IoError, "write to '" + path + "' failed");
}

std::vector<Index> parse_ranks(const std::string& text) {
  const std::string s = trim(text);
  require(!s.empty(), Errc::ConfigInvalid, "ranks: empty specification");
  std::vector<Index> ranks;
  if (s.find(':') != std::string::npos) {
    const std::vector<std::string> parts = split(s, ':');
    require(parts.size() == 2 || parts.size() == 3, Errc::ConfigInvalid,
            "ranks: expected a:b or a:b:step");
    const long long a = to_int(parts[0], "ranks");
    const long long b = to_int(parts[1], "ranks");
    const long long step = parts.size() == 3 ? to_int(parts[2], "ranks") : 1;
    require(a >= 1 && b >= a && step >= 1, Errc::ConfigInvalid,
            "ranks: need 1 <= a <= b and step >= 1");
    for (long long v = a; v <= b; v += step) ranks.push_back(static_cast<Index>(v));
  } else {
    for (const std::string& tok : split(s, ',')) {
      const long long v = to_int(tok, "ranks");
      require(v >= 1, Errc::ConfigInvalid, "ranks: must be >= 1");
      ranks.push_back(static_cast<Index>(v));
    }
  }
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
  return ranks;
}

MatrixSource parse_matrix_source(const std::string& text) {
  const std::vector<std::string> parts = split(trim(text), ':');
  require(!parts.empty() && !parts[0].empty(), Errc::ConfigInvalid, "empty matrix source");
  MatrixSource src;
  if (parts[0] == "snn") {
    require(parts.size() == 1, Errc::ConfigInvalid, "snn takes no parameters");
    src.kind = MatrixSourceKind::snn;
  } else if (parts[0] == "diag") {
    require(parts.size() == 2, Errc::ConfigInvalid, "expected diag:<gamma>");
    src.kind = MatrixSourceKind::diag_counterexample;
    src.gamma = to_double(parts[1], "gamma");
  } else if (parts[0] == "spectrum") {
    require(parts.size() == 4, Errc::ConfigInvalid, "expected spectrum:<family>:<decay>:<n>");
    src.kind = MatrixSourceKind::spsd_spectrum;
    src.spectrum_family = parts[1];
    src.decay = to_double(parts[2], "decay");
    src.n = static_cast<Index>(to_int(parts[3], "n"));
  } else if (parts[0] == "kernel") {
    require(parts.size() == 3 || parts.size() == 4, Errc::ConfigInvalid,
            "expected kernel:<path>:<sigma>[:<subsample>]");
    src.kind = MatrixSourceKind::kernel;
    src.dataset_path = parts[1];
    if (parts[2] == "30sqrtd")
      src.sigma_thirty_sqrt_d = true;
    else
      src.sigma = to_double(parts[2], "sigma");
    if (parts.size() == 4) src.subsample_to = static_cast<Index>(to_int(parts[3], "subsample"));
  } else {
    raise(Errc::ConfigInvalid, "unknown matrix source '" + parts[0] + "'");
  }
  return src;
}

ExperimentConfig load_config(std::istream& in) {
  ExperimentConfig cfg;
  cfg.variants.clear();
  bool saw_ranks = false, saw_variants = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    require(eq != std::string::npos, Errc::ConfigInvalid,
            "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    require(!key.empty() && !value.empty(), Errc::ConfigInvalid,
            "line " + std::to_string(lineno) + ": empty key or value");

    if (key == "matrix") {
      if (value == "snn")
        cfg.source.kind = MatrixSourceKind::snn;
      else if (value == "diag")
        cfg.source.kind = MatrixSourceKind::diag_counterexample;
      else if (value == "spectrum")
        cfg.source.kind = MatrixSourceKind::spsd_spectrum;
      else if (value == "kernel")
        cfg.source.kind = MatrixSourceKind::kernel;
      else
        raise(Errc::ConfigInvalid, "unknown matrix '" + value + "'");
    } else if (key == "gamma") {
      cfg.source.gamma = to_double(value, key);
    } else if (key == "n") {
      cfg.source.n = static_cast<Index>(to_int(value, key));
    } else if (key == "family") {
      cfg.source.spectrum_family = value;
    } else if (key == "decay") {
      cfg.source.decay = to_double(value, key);
    } else if (key == "levels") {
      cfg.source.band_levels = parse_double_list(value, key);
    } else if (key == "counts") {
      cfg.source.band_counts.clear();
      for (const std::string& tok : split(value, ','))
        cfg.source.band_counts.push_back(static_cast<Index>(to_int(tok, key)));
    } else if (key == "dataset") {
      cfg.source.dataset_path = value;
    } else if (key == "sigma") {
      if (value == "30sqrtd")
        cfg.source.sigma_thirty_sqrt_d = true;
      else
        cfg.source.sigma = to_double(value, key);
    } else if (key == "subsample") {
      cfg.source.subsample_to = static_cast<Index>(to_int(value, key));
    } else if (key == "selector") {
      cfg.selector = parse_selector(value);
    } else if (key == "variants") {
      cfg.variants.clear();
      for (const std::string& tok : split(value, ',')) cfg.variants.push_back(parse_variant(tok));
      saw_variants = true;
    } else if (key == "ranks") {
      cfg.ranks = parse_ranks(value);
      saw_ranks = true;
    } else if (key == "epsilon") {
      cfg.epsilon = parse_threshold(value, key);
    } else if (key == "shift") {
      cfg.shift = parse_threshold(value, key);
    } else if (key == "precision") {
      if (value == "double")
        cfg.precision = PrecisionKind::double64;
      else if (value == "single")
        cfg.precision = PrecisionKind::single32;
      else
        raise(Errc::ConfigInvalid, "precision must be double or single");
    } else if (key == "seed") {
      cfg.seed = to_seed(value, key);
    } else if (key == "out") {
      cfg.out_path = value;
    } else if (key == "timing") {
      if (value == "true")
        cfg.timing = true;
      else if (value == "false")
        cfg.timing = false;
      else
        raise(Errc::ConfigInvalid, "timing must be true or false");
    } else {
      raise(Errc::ConfigInvalid, "unknown key '" + key + "'");
    }
  }
  require(saw_ranks, Errc::ConfigInvalid, "missing required key 'ranks'");
  if (!saw_variants)
    cfg.variants = {Variant::plain, Variant::stabilized, Variant::shifted,
                    Variant::direct_solve, Variant::pinv};
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::ConfigInvalid, "cannot open config '" + path + "'");
  return load_config(in);
}

CounterexampleReport demo_counterexample(double gamma, double delta) {
  require(std::isfinite(gamma) && gamma > 0 && gamma < 1, Errc::ParamOutOfRange,
          "gamma must be in (0, 1)");
  require(std::isfinite(delta) && delta > 0 && delta < 0.5, Errc::ParamOutOfRange,
          "delta must be in (0, 0.5)");

  const SymMatrix<double> a = gen_diag_counterexample(gamma);
  IndexSet j;
  j.idx = {0, 1};
  j.n = 3;
  const Matrix<double> c = columns(a, j);

  // Naive downdating route with an injected factorization error: the exact
  // Cholesky factor of A(J,J) is diag(1, gamma); perturb the small pivot to
  // delta * gamma and push the columns through R^-1 as the plain method does.
  Matrix<double> rhat = Matrix<double>::Zero(2, 2);
  rhat(0, 0) = 1.0;
  rhat(1, 1) = delta * gamma;
  const Matrix<double> bhat =
      rhat.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(c);
  const auto spectral_abs = [](const Matrix<double>& m) {
    Eigen::SelfAdjointEigenSolver<Matrix<double>> es(((m + m.transpose()) * 0.5).eval());
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };

  CounterexampleReport rep;
  rep.gamma = gamma;
  rep.delta = delta;
  rep.naive_error = spectral_abs(a.mat() - bhat * bhat.transpose());
  rep.analytic_error = gamma * gamma * (1.0 / (delta * delta) - 1.0);

  // The truncated route sees the same matrix; its threshold absorbs the tiny
  // pivot instead of dividing by it.
  rep.epsilon = 10.0 * unit_roundoff<double>() * sym_spectrum(a)(0);
  const NystromFactor<double> f = nystrom_stabilized(a, j, rep.epsilon);
  rep.stabilized_error = spectral_abs(a.mat() - densify(f).mat());

  rep.naive_matches_analytic =
      rep.naive_error >= 0.5 * rep.analytic_error && rep.naive_error <= 1.5 * rep.analytic_error;
  rep.stabilized_small = rep.stabilized_error <= std::max(gamma * gamma, 10.0 * rep.epsilon);

  std::ostringstream os;
  os << "matrix: diag(1, gamma^2, 0), gamma = " << format_double(gamma) << "\n"
     << "selected columns: 1, 2 of 3; exact core factor diag(1, gamma)\n"
     << "injected factor: diag(1, delta * gamma), delta = " << format_double(delta) << "\n"
     << "naive error        = " << format_double(rep.naive_error) << "\n"
     << "analytic value     = " << format_double(rep.analytic_error)
     << "  (gamma^2 (1/delta^2 - 1))\n"
     << "stabilized error   = " << format_double(rep.stabilized_error)
     << "  (threshold " << format_double(rep.epsilon) << ")\n"
     << "naive matches analytic: " << (rep.naive_matches_analytic ? "yes" : "no") << "\n"
     << "stabilized stays small: " << (rep.stabilized_small ? "yes" : "no") << "\n";
  rep.text = os.str();
  return rep;
}

}  // namespace nystab
