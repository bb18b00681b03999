#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "nystab/bench.hpp"
#include "nystab/colselect.hpp"
#include "nystab/dense_core.hpp"

// keep after the Eigen-using headers: resolv.h (via httplib) defines a
// function-like `_res` macro that corrupts Eigen parameter lists
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "CLI11.hpp"
#include "httplib.h"

namespace {

void http_download(const std::string& url, const std::string& dest) {
  const std::size_t scheme_end = url.find("://");
  nystab::require(scheme_end != std::string::npos, nystab::Errc::NetworkError,
                  "bad url '" + url + "'");
  const std::size_t path_start = url.find('/', scheme_end + 3);
  const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(base);
  client.set_follow_location(true);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(300, 0);
  auto res = client.Get(path);
  nystab::require(static_cast<bool>(res), nystab::Errc::NetworkError,
                  "request to " + url + " failed: " + httplib::to_string(res.error()));
  nystab::require(res->status == 200, nystab::Errc::NetworkError,
                  "HTTP " + std::to_string(res->status) + " for " + url);
  std::ofstream out(dest, std::ios::binary);
  nystab::require(out.good(), nystab::Errc::IoError, "cannot write '" + dest + "'");
  out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
  out.flush();
  nystab::require(out.good(), nystab::Errc::IoError, "write to '" + dest + "' failed");
}

int run_sweep_cmd(const std::string& config_path, const std::string& ranks_text,
                  const std::string& precision_text, bool have_seed, std::uint64_t seed,
                  const std::string& out_path, bool timing) {
  nystab::ExperimentConfig cfg = nystab::load_config_file(config_path);
  if (!ranks_text.empty()) cfg.ranks = nystab::parse_ranks(ranks_text);
  if (!precision_text.empty()) {
    if (precision_text == "double")
      cfg.precision = nystab::PrecisionKind::double64;
    else if (precision_text == "single")
      cfg.precision = nystab::PrecisionKind::single32;
    else
      nystab::raise(nystab::Errc::ConfigInvalid, "precision must be double or single");
  }
  if (have_seed) cfg.seed = seed;
  if (!out_path.empty()) cfg.out_path = out_path;
  if (timing) cfg.timing = true;

  const std::vector<nystab::SweepRecord> records = nystab::run_sweep(cfg);
  nystab::emit_csv_file(records, cfg.out_path);
  std::cout << records.size() << " records -> " << cfg.out_path << "\n";
  return 0;
}

int run_diagnose_cmd(const std::string& matrix_text, nystab::Index rank, std::uint64_t seed) {
  using nystab::Index;
  const nystab::MatrixSource src = nystab::parse_matrix_source(matrix_text);
  const nystab::SymMatrix<double> a = nystab::build_matrix(src, seed);
  nystab::require(rank >= 1 && rank <= a.n(), nystab::Errc::RankOutOfRange,
                  "rank must be in [1, " + std::to_string(a.n()) + "]");
  const nystab::IndexSet j = nystab::refined_select(a, rank);
  const double norm2 = nystab::spectral_norm_est(a, 100, seed);
  const double epsilon = 10.0 * nystab::unit_roundoff<double>() * norm2;
  const nystab::StabilityDiagnostics d = nystab::diagnostics(a, j, epsilon);
  const nystab::MaxvolCheck<double> mv = nystab::verify_local_maxvol(a, j);

  std::cout << "n                 = " << a.n() << "\n";
  std::cout << "rank              = " << rank << "\n";
  std::cout << "selected columns  =";
  for (Index v : j.idx) std::cout << ' ' << v;
  std::cout << "\n";
  std::cout << "locally max-vol   = " << (mv.is_local_maxvol ? "yes" : "no") << "\n";
  std::cout << "epsilon           = " << epsilon << "\n";
  std::cout << "sigma_min_sq      = " << d.sigma_min_sq << "\n";
  std::cout << "proj_norm         = " << d.proj_norm << "\n";
  std::cout << "eps_proj_residual = " << d.eps_proj_residual << "\n";
  std::cout << "maxnorm_err       = " << d.maxnorm_err << "\n";
  std::cout << "det_value         = " << d.det_value << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nystrom approximation benchmark harness"};
  app.require_subcommand(1);

  auto* sweep = app.add_subcommand("sweep", "Run a rank sweep and write a CSV of records");
  std::string config_path, ranks_text, precision_text, out_path;
  std::uint64_t seed = 0;
  bool timing = false;
  sweep->add_option("--config", config_path, "Config file (key = value lines)")->required();
  sweep->add_option("--ranks", ranks_text, "Override ranks: a:b:step or comma list");
  sweep->add_option("--precision", precision_text, "Override precision: double or single");
  auto* seed_opt = sweep->add_option("--seed", seed, "Override the experiment seed");
  sweep->add_option("--out", out_path, "Override the output CSV path");
  sweep->add_flag("--timing", timing, "Record wall-clock time per variant call");

  auto* demo = app.add_subcommand("demo-counterexample",
                                  "Show how one perturbed pivot derails the naive method");
  double gamma = 0, delta = 0;
  demo->add_option("--gamma", gamma, "Small diagonal scale, in (0, 1)")->required();
  demo->add_option("--delta", delta, "Pivot perturbation factor, in (0, 0.5)")->required();

  auto* fetch = app.add_subcommand("fetch", "Download datasets into a local cache");
  std::vector<std::string> datasets;
  std::string cache_dir = "data";
  std::string manifest_path;
  fetch->add_option("--dataset", datasets, "Dataset name (repeatable)")->required();
  fetch->add_option("--cache", cache_dir, "Cache directory");
  fetch->add_option("--manifest", manifest_path, "Manifest file overriding the builtin list");

  auto* diagnose = app.add_subcommand("diagnose", "Print stability diagnostics for one rank");
  std::string matrix_text;
  nystab::Index rank = 0;
  std::uint64_t dseed = 1;
  diagnose
      ->add_option("--matrix", matrix_text,
                   "snn | diag:<gamma> | spectrum:<family>:<decay>:<n> | "
                   "kernel:<path>:<sigma>[:<subsample>]")
      ->required();
  diagnose->add_option("--rank", rank, "Number of columns to select")->required();
  diagnose->add_option("--seed", dseed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed())
      return run_sweep_cmd(config_path, ranks_text, precision_text, seed_opt->count() > 0, seed,
                           out_path, timing);
    if (demo->parsed()) {
      const nystab::CounterexampleReport rep = nystab::demo_counterexample(gamma, delta);
      std::cout << rep.text;
      return rep.naive_matches_analytic && rep.stabilized_small ? 0 : 1;
    }
    if (fetch->parsed()) {
      std::vector<nystab::ManifestEntry> manifest;
      if (manifest_path.empty()) {
        manifest = nystab::builtin_manifest();
      } else {
        std::ifstream in(manifest_path);
        nystab::require(in.good(), nystab::Errc::ConfigInvalid,
                        "cannot open manifest '" + manifest_path + "'");
        manifest = nystab::parse_manifest(in);
      }
      const auto reports = nystab::fetch_datasets(datasets, cache_dir, manifest, http_download);
      for (const nystab::FetchReport& r : reports)
        std::cout << r.name << ": "
                  << (r.status == nystab::FetchStatus::cached ? "cached" : "downloaded")
                  << " -> " << r.path << "\n";
      return 0;
    }
    if (diagnose->parsed()) return run_diagnose_cmd(matrix_text, rank, dseed);
  } catch (const nystab::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "Error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
