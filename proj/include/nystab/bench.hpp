#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nystab/kernels_data.hpp"
#include "nystab/nystrom.hpp"
#include "nystab/types.hpp"

namespace nystab {

enum class SelectorKind { greedy, qrcp, uniform, refined };

inline const char* selector_name(SelectorKind s) {
  switch (s) {
    case SelectorKind::greedy: return "greedy";
    case SelectorKind::qrcp: return "qrcp";
    case SelectorKind::uniform: return "uniform";
    case SelectorKind::refined: return "refined";
  }
  return "?";
}

enum class PrecisionKind { double64, single32 };

// Threshold rule for the stabilized truncation and the shifted variant's
// shift: either the recommended 10 u ||A||_2 (spectral norm estimated by the
// seeded power iteration) or a fixed absolute value.
struct ThresholdRule {
  bool ten_u_norm = true;
  double fixed = 0.0;
};

enum class MatrixSourceKind { snn, diag_counterexample, spsd_spectrum, kernel };

struct MatrixSource {
  MatrixSourceKind kind = MatrixSourceKind::snn;

  double gamma = 1e-8;  // diag_counterexample

  // spsd_spectrum: family "geometric" (decay^(i-1)), "algebraic" (i^-decay),
  // or "bands" (levels[k] repeated counts[k] times).
  Index n = 300;
  std::string spectrum_family = "geometric";
  double decay = 0.5;
  std::vector<double> band_levels;
  std::vector<Index> band_counts;

  // kernel: LIBSVM file -> standardize -> optional subsample -> RBF.
  std::string dataset_path;
  double sigma = 3.0;
  bool sigma_thirty_sqrt_d = false;  // sigma = 30 sqrt(d), resolved after parsing
  Index subsample_to = 0;            // 0 = keep all rows
};

struct ExperimentConfig {
  MatrixSource source;
  SelectorKind selector = SelectorKind::refined;
  std::vector<Variant> variants = {Variant::plain, Variant::stabilized, Variant::shifted,
                                   Variant::direct_solve, Variant::pinv};
  std::vector<Index> ranks;
  ThresholdRule epsilon;
  ThresholdRule shift;
  PrecisionKind precision = PrecisionKind::double64;
  std::uint64_t seed = 1;
  std::string out_path = "sweep.csv";
  bool timing = false;  // off by default so identical configs give identical bytes
};

struct SweepRecord {
  Index rank = 0;
  std::string variant;
  std::string selector;
  double rel_frob = 0;
  double rel_spectral = 0;
  double tsvd_rel_frob = 0;
  Index r_hat = 0;
  double sigma_min_sq = 0;
  double wall_time_ms = 0;
  std::string status;  // ok | breakdown | unstable_flag
};

// Materializes the configured matrix (always in double; the sweep casts once
// for single precision). Kernel sources raise MatrixSourceUnavailable when
// the dataset file is missing.
SymMatrix<double> build_matrix(const MatrixSource& src, std::uint64_t seed);

// Runs every (rank, variant) cell: select indices once per rank, run each
// variant, record errors against the once-per-matrix eigenvalue baseline.
// Failures become record statuses, never dropped rows. Output is sorted by
// (rank, variant name) and is a pure function of the config.
std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg);

// CSV with a header of exactly the SweepRecord field names; floats use
// shortest round-trip formatting.
void emit_csv(const std::vector<SweepRecord>& records, std::ostream& out);
void emit_csv_file(const std::vector<SweepRecord>& records, const std::string& path);

// Key = value configuration text (# comments). Unknown keys, bad values, or
// missing required keys raise ConfigInvalid.
ExperimentConfig load_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

// "a:b:step" (inclusive endpoints) or a comma-separated list.
std::vector<Index> parse_ranks(const std::string& text);

// Matrix mini-language for the diagnose subcommand:
//   snn | diag:<gamma> | spectrum:<family>:<decay>:<n> | kernel:<path>:<sigma>[:<m>]
MatrixSource parse_matrix_source(const std::string& text);

// The 3 x 3 injected-perturbation demonstration: a factorization error that
// the naive downdating route amplifies to gamma^2 (1/delta^2 - 1) while the
// truncated route stays at gamma^2.
struct CounterexampleReport {
  double gamma = 0;
  double delta = 0;
  double naive_error = 0;      // ||A - Bhat Bhat^T||_2 with the perturbed factor
  double analytic_error = 0;   // gamma^2 (1/delta^2 - 1)
  double stabilized_error = 0; // ||A - B B^T||_2 via the truncated route
  double epsilon = 0;          // truncation threshold used (10 u)
  bool naive_matches_analytic = false;  // within a factor of 1.5
  bool stabilized_small = false;        // <= max(gamma^2, 10 epsilon)
  std::string text;                     // printable summary
};

CounterexampleReport demo_counterexample(double gamma, double delta);

// Dataset fetch: plain-text manifest (name url sha256 per line, '#' comments,
// sha256 "-" = unpinned). Downloads go through the injected callback so the
// library itself never touches the network.
struct ManifestEntry {
  std::string name;
  std::string url;
  std::string sha256;  // lowercase hex, or "-" when unpinned
};

std::vector<ManifestEntry> builtin_manifest();
std::vector<ManifestEntry> parse_manifest(std::istream& in);

enum class FetchStatus { cached, downloaded };

struct FetchReport {
  std::string name;
  FetchStatus status = FetchStatus::cached;
  std::string path;
};

using Downloader = std::function<void(const std::string& url, const std::string& dest)>;

// For each name: verify a cached file against the manifest (mismatch deletes
// the file and raises ChecksumMismatch) or download, verify, and move into
// place. Unknown names raise ConfigInvalid listing what the manifest knows.
std::vector<FetchReport> fetch_datasets(const std::vector<std::string>& names,
                                        const std::string& cache_dir,
                                        const std::vector<ManifestEntry>& manifest,
                                        const Downloader& download);

std::string sha256_file(const std::string& path);

}  // namespace nystab
