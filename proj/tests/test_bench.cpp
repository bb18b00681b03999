#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nystab/bench.hpp"
#include "nystab/dense_core.hpp"
#include "support.hpp"

using namespace nystab;

TEST_SUITE("bench") {

TEST_CASE("rank list parsing") {
  CHECK(parse_ranks("5") == std::vector<Index>{5});
  CHECK(parse_ranks("2,5,3,5") == std::vector<Index>{2, 3, 5});
  CHECK(parse_ranks("3:5") == std::vector<Index>{3, 4, 5});
  CHECK(parse_ranks("10:50:10") == std::vector<Index>{10, 20, 30, 40, 50});
  CHECK(parse_ranks("10:11:10") == std::vector<Index>{10});
  CHECK_THROWS_AS(parse_ranks(""), Error);
  CHECK_THROWS_AS(parse_ranks("0"), Error);
  CHECK_THROWS_AS(parse_ranks("a"), Error);
  CHECK_THROWS_AS(parse_ranks("5:2"), Error);
  CHECK_THROWS_AS(parse_ranks("1:5:0"), Error);
}

TEST_CASE("matrix source mini-language") {
  CHECK(parse_matrix_source("snn").kind == MatrixSourceKind::snn);
  const MatrixSource d = parse_matrix_source("diag:1e-6");
  CHECK(d.kind == MatrixSourceKind::diag_counterexample);
  CHECK(d.gamma == 1e-6);
  const MatrixSource s = parse_matrix_source("spectrum:geometric:0.5:100");
  CHECK(s.kind == MatrixSourceKind::spsd_spectrum);
  CHECK(s.spectrum_family == "geometric");
  CHECK(s.decay == 0.5);
  CHECK(s.n == 100);
  const MatrixSource k = parse_matrix_source("kernel:data/foo.libsvm:3.5:200");
  CHECK(k.kind == MatrixSourceKind::kernel);
  CHECK(k.dataset_path == "data/foo.libsvm");
  CHECK(k.sigma == 3.5);
  CHECK(k.subsample_to == 200);
  CHECK(parse_matrix_source("kernel:p:30sqrtd").sigma_thirty_sqrt_d);
  CHECK_THROWS_AS(parse_matrix_source(""), Error);
  CHECK_THROWS_AS(parse_matrix_source("snn:1"), Error);
  CHECK_THROWS_AS(parse_matrix_source("diag"), Error);
  CHECK_THROWS_AS(parse_matrix_source("lattice:3"), Error);
}

TEST_CASE("config text") {
  SUBCASE("full round-trip of keys") {
    std::istringstream in(
        "# comment\n"
        "matrix = spectrum\n"
        "family = algebraic\n"
        "decay = 2\n"
        "n = 40\n"
        "selector = qrcp\n"
        "variants = stabilized, pinv\n"
        "ranks = 2,4\n"
        "epsilon = 1e-10\n"
        "shift = 10u\n"
        "precision = single\n"
        "seed = 7\n"
        "out = run.csv\n"
        "timing = true\n");
    const ExperimentConfig cfg = load_config(in);
    CHECK(cfg.source.kind == MatrixSourceKind::spsd_spectrum);
    CHECK(cfg.source.spectrum_family == "algebraic");
    CHECK(cfg.source.n == 40);
    CHECK(cfg.selector == SelectorKind::qrcp);
    REQUIRE(cfg.variants.size() == 2);
    CHECK(cfg.variants[0] == Variant::stabilized);
    CHECK(cfg.variants[1] == Variant::pinv);
    CHECK(cfg.ranks == std::vector<Index>{2, 4});
    CHECK(!cfg.epsilon.ten_u_norm);
    CHECK(cfg.epsilon.fixed == 1e-10);
    CHECK(cfg.shift.ten_u_norm);
    CHECK(cfg.precision == PrecisionKind::single32);
    CHECK(cfg.seed == 7);
    CHECK(cfg.out_path == "run.csv");
    CHECK(cfg.timing);
  }
  SUBCASE("separate source keys") {
    std::istringstream in(
        "matrix = spectrum\n"
        "family = bands\n"
        "n = 6\n"
        "levels = 1, 0.5\n"
        "counts = 2, 3\n"
        "ranks = 2\n");
    const ExperimentConfig cfg = load_config(in);
    CHECK(cfg.source.band_levels == std::vector<double>{1.0, 0.5});
    CHECK(cfg.source.band_counts == std::vector<Index>{2, 3});
    CHECK(cfg.variants.size() == 5);
  }
  SUBCASE("bad input raises") {
    auto bad = [](const char* text) {
      std::istringstream in(text);
      CHECK_THROWS_WITH_AS(load_config(in), doctest::Contains("ConfigInvalid"), Error);
    };
    bad("ranks = 2\nwhatever = 3\n");
    bad("matrix = snn\n");
    bad("ranks = 2\nselector = best\n");
    bad("ranks = 2\ntiming = maybe\n");
    bad("ranks = 2\nprecision = half\n");
    bad("no equals sign\n");
  }
}

TEST_CASE("matrix construction") {
  SUBCASE("geometric spectrum") {
    MatrixSource src;
    src.kind = MatrixSourceKind::spsd_spectrum;
    src.n = 5;
    src.spectrum_family = "geometric";
    src.decay = 0.5;
    const SymMatrix<double> a = build_matrix(src, 3);
    const Vector<double> spec = sym_spectrum(a);
    for (Index i = 0; i < 5; ++i)
      CHECK(spec(i) == doctest::Approx(std::pow(0.5, static_cast<double>(i))).epsilon(1e-10));
  }
  SUBCASE("algebraic spectrum") {
    MatrixSource src;
    src.kind = MatrixSourceKind::spsd_spectrum;
    src.n = 4;
    src.spectrum_family = "algebraic";
    src.decay = 1.0;
    const SymMatrix<double> a = build_matrix(src, 3);
    const Vector<double> spec = sym_spectrum(a);
    for (Index i = 0; i < 4; ++i)
      CHECK(spec(i) == doctest::Approx(1.0 / static_cast<double>(i + 1)).epsilon(1e-10));
  }
  SUBCASE("banded spectrum") {
    MatrixSource src;
    src.kind = MatrixSourceKind::spsd_spectrum;
    src.n = 6;
    src.spectrum_family = "bands";
    src.band_levels = {1.0, 0.5};
    src.band_counts = {2, 3};
    const SymMatrix<double> a = build_matrix(src, 1);
    const Vector<double> spec = sym_spectrum(a);
    CHECK(spec(0) == doctest::Approx(1.0));
    CHECK(spec(1) == doctest::Approx(1.0));
    CHECK(spec(2) == doctest::Approx(0.5));
    CHECK(spec(4) == doctest::Approx(0.5));
    CHECK(std::abs(spec(5)) <= 1e-12);
  }
  SUBCASE("missing kernel dataset") {
    MatrixSource src;
    src.kind = MatrixSourceKind::kernel;
    src.dataset_path = "does/not/exist.libsvm";
    CHECK_THROWS_WITH_AS(build_matrix(src, 1),
                         doctest::Contains("MatrixSourceUnavailable"), Error);
  }
}

TEST_CASE("sweep on the diagonal counterexample") {
  ExperimentConfig cfg;
  cfg.source.kind = MatrixSourceKind::diag_counterexample;
  cfg.source.gamma = 1e-8;
  cfg.ranks = {2};
  cfg.variants = {Variant::stabilized};
  const std::vector<SweepRecord> recs = run_sweep(cfg);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].rank == 2);
  CHECK(recs[0].variant == "stabilized");
  CHECK(recs[0].selector == "refined");
  CHECK(recs[0].status == "ok");
  CHECK(recs[0].r_hat == 1);
  CHECK(recs[0].rel_frob <= 1e-14);
  CHECK(recs[0].wall_time_ms == 0.0);
}

TEST_CASE("sweep records breakdowns instead of dropping rows") {
  ExperimentConfig cfg;
  cfg.source.kind = MatrixSourceKind::diag_counterexample;
  cfg.source.gamma = 1e-8;
  cfg.selector = SelectorKind::uniform;
  cfg.ranks = {3};
  cfg.variants = {Variant::plain, Variant::stabilized, Variant::direct_solve};
  const std::vector<SweepRecord> recs = run_sweep(cfg);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].variant == "direct_solve");
  CHECK(recs[0].status == "breakdown");
  CHECK(recs[1].variant == "plain");
  CHECK(recs[1].status == "breakdown");
  CHECK(std::isnan(recs[1].rel_frob));
  CHECK(recs[1].r_hat == 0);
  CHECK(recs[2].variant == "stabilized");
  CHECK(recs[2].status == "ok");
  CHECK(recs[2].r_hat == 1);
  CHECK(std::isnan(recs[1].sigma_min_sq));

  std::ostringstream out;
  emit_csv(recs, out);
  CHECK(out.str().find(",nan,") != std::string::npos);
}

TEST_CASE("sweep output is deterministic and sorted") {
  ExperimentConfig cfg;
  cfg.source.kind = MatrixSourceKind::spsd_spectrum;
  cfg.source.n = 15;
  cfg.ranks = {4, 2};
  cfg.variants = {Variant::pinv, Variant::plain, Variant::direct_solve};
  const std::vector<SweepRecord> r1 = run_sweep(cfg);
  const std::vector<SweepRecord> r2 = run_sweep(cfg);
  REQUIRE(r1.size() == 6);
  CHECK(r1[0].rank == 2);
  CHECK(r1[0].variant == "direct_solve");
  CHECK(r1[1].variant == "pinv");
  CHECK(r1[2].variant == "plain");
  CHECK(r1[3].rank == 4);
  std::ostringstream s1, s2;
  emit_csv(r1, s1);
  emit_csv(r2, s2);
  CHECK(s1.str() == s2.str());
}

TEST_CASE("sweep validation") {
  ExperimentConfig cfg;
  cfg.source.kind = MatrixSourceKind::diag_counterexample;
  SUBCASE("no ranks") {
    CHECK_THROWS_AS(run_sweep(cfg), Error);
  }
  SUBCASE("rank beyond the matrix") {
    cfg.ranks = {5};
    CHECK_THROWS_WITH_AS(run_sweep(cfg), doctest::Contains("ConfigInvalid"), Error);
  }
  SUBCASE("duplicate variants") {
    cfg.ranks = {2};
    cfg.variants = {Variant::plain, Variant::plain};
    CHECK_THROWS_AS(run_sweep(cfg), Error);
  }
}

TEST_CASE("csv formatting") {
  SweepRecord r;
  r.rank = 3;
  r.variant = "stabilized";
  r.selector = "refined";
  r.rel_frob = 0.5;
  r.rel_spectral = 1e-16;
  r.tsvd_rel_frob = std::numeric_limits<double>::quiet_NaN();
  r.r_hat = 2;
  r.sigma_min_sq = std::numeric_limits<double>::infinity();
  r.wall_time_ms = 0;
  r.status = "ok";
  std::ostringstream out;
  emit_csv({r}, out);
  CHECK(out.str() ==
        "rank,variant,selector,rel_frob,rel_spectral,tsvd_rel_frob,r_hat,sigma_min_sq,"
        "wall_time_ms,status\n"
        "3,stabilized,refined,0.5,1e-16,nan,2,inf,0,ok\n");
  CHECK_THROWS_WITH_AS(emit_csv({}, out), doctest::Contains("EmptyInput"), Error);
}

TEST_CASE("single precision sweep runs and differs from double") {
  ExperimentConfig cfg;
  cfg.source.kind = MatrixSourceKind::spsd_spectrum;
  cfg.source.n = 20;
  cfg.source.decay = 0.5;
  cfg.ranks = {5};
  cfg.variants = {Variant::stabilized};
  const std::vector<SweepRecord> dbl = run_sweep(cfg);
  cfg.precision = PrecisionKind::single32;
  const std::vector<SweepRecord> flt = run_sweep(cfg);
  REQUIRE(dbl.size() == 1);
  REQUIRE(flt.size() == 1);
  CHECK(dbl[0].status == "ok");
  CHECK(flt[0].status == "ok");
  CHECK(dbl[0].rel_frob == doctest::Approx(flt[0].rel_frob).epsilon(1e-3));
  CHECK(dbl[0].rel_frob != flt[0].rel_frob);
}

TEST_CASE("counterexample demonstration") {
  const CounterexampleReport rep = demo_counterexample(1e-8, 1e-3);
  CHECK(rep.naive_matches_analytic);
  CHECK(rep.stabilized_small);
  CHECK(rep.analytic_error == doctest::Approx(1e-16 * (1e6 - 1)));
  CHECK(rep.naive_error == doctest::Approx(rep.analytic_error).epsilon(0.5));
  CHECK(rep.stabilized_error <= std::max(1e-16, 10 * rep.epsilon));
  CHECK(!rep.text.empty());
  CHECK_THROWS_AS(demo_counterexample(1.0, 1e-3), Error);
  CHECK_THROWS_AS(demo_counterexample(1e-8, 0.5), Error);
  CHECK_THROWS_AS(demo_counterexample(0.0, 0.1), Error);
}

TEST_CASE("manifest parsing") {
  SUBCASE("builtin entries are well formed and unique") {
    const std::vector<ManifestEntry> m = builtin_manifest();
    CHECK(m.size() >= 10);
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(m[i].url.rfind("https://", 0) == 0);
      CHECK(!m[i].name.empty());
      for (std::size_t k = i + 1; k < m.size(); ++k) CHECK(m[i].name != m[k].name);
    }
  }
  SUBCASE("text form") {
    std::istringstream in(
        "# datasets\n"
        "tiny https://example.org/tiny.libsvm -\n"
        "\n"
        "pinned https://example.org/p "
        "0123456789abcdef0123456789abcdef0123456789abcdef0123456789abcdef\n");
    const std::vector<ManifestEntry> m = parse_manifest(in);
    REQUIRE(m.size() == 2);
    CHECK(m[0].name == "tiny");
    CHECK(m[0].sha256 == "-");
    CHECK(m[1].sha256.size() == 64);
  }
  SUBCASE("malformed rows rejected") {
    std::istringstream one("name-only\n");
    CHECK_THROWS_WITH_AS(parse_manifest(one), doctest::Contains("line 1"), Error);
    std::istringstream dup("a https://x -\na https://y -\n");
    CHECK_THROWS_AS(parse_manifest(dup), Error);
    std::istringstream badhash("a https://x xyz\n");
    CHECK_THROWS_AS(parse_manifest(badhash), Error);
  }
}

}  // TEST_SUITE
