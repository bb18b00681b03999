#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nystab/dense_core.hpp"
#include "nystab/kernels_data.hpp"
#include "nystab/nystrom.hpp"
#include "support.hpp"

using namespace nystab;
using testsupport::make_set;

TEST_SUITE("kernels_data") {

TEST_CASE("libsvm parsing") {
  SUBCASE("sparse indices fill with zeros") {
    std::istringstream in("1 1:0.5 3:2.0\n");
    const Dataset ds = parse_libsvm(in);
    CHECK(ds.n() == 1);
    CHECK(ds.d() == 3);
    CHECK(ds.points(0, 0) == 0.5);
    CHECK(ds.points(0, 1) == 0.0);
    CHECK(ds.points(0, 2) == 2.0);
    REQUIRE(ds.labels.has_value());
    CHECK((*ds.labels)(0) == 1.0);
  }
  SUBCASE("width is the maximum feature index across lines") {
    std::istringstream in("-1\n+1 2:1\n");
    const Dataset ds = parse_libsvm(in);
    CHECK(ds.n() == 2);
    CHECK(ds.d() == 2);
    CHECK(ds.points.row(0).norm() == 0.0);
    CHECK(ds.points(1, 0) == 0.0);
    CHECK(ds.points(1, 1) == 1.0);
    CHECK((*ds.labels)(0) == -1.0);
    CHECK((*ds.labels)(1) == 1.0);
  }
  SUBCASE("serialization round-trips exactly") {
    std::istringstream in("1 1:0.1 4:-2.5e-3\n0 2:7\n3.5 1:1 2:2 3:3 4:4\n");
    const Dataset ds = parse_libsvm(in);
    std::ostringstream out;
    serialize_libsvm(ds, out);
    std::istringstream back(out.str());
    const Dataset ds2 = parse_libsvm(back);
    CHECK(ds2.n() == ds.n());
    CHECK(ds2.d() == ds.d());
    CHECK((ds2.points - ds.points).norm() == 0.0);
    CHECK((*ds2.labels - *ds.labels).norm() == 0.0);
  }
  SUBCASE("malformed lines carry the line number") {
    auto expect_throw = [](const char* text, const char* what) {
      std::istringstream in(text);
      CHECK_THROWS_WITH_AS(parse_libsvm(in), doctest::Contains(what), Error);
    };
    expect_throw("1 foo\n", "MalformedLine");
    expect_throw("1 0:1\n", "MalformedLine");
    expect_throw("1 2:abc\n", "MalformedLine");
    expect_throw("1 1:1\n1 3:1 2:1\n", "line 2");
  }
  SUBCASE("empty input is an error") {
    std::istringstream in("\n  \n");
    CHECK_THROWS_WITH_AS(parse_libsvm(in), doctest::Contains("EmptyInput"), Error);
  }
}

TEST_CASE("standardization") {
  SUBCASE("two points become plus and minus one") {
    Dataset ds;
    ds.points.resize(2, 1);
    ds.points << 0, 2;
    const StandardizeResult res = standardize(ds);
    CHECK(res.data.points(0, 0) == doctest::Approx(-1.0));
    CHECK(res.data.points(1, 0) == doctest::Approx(1.0));
    CHECK(res.zero_variance_features.empty());
  }
  SUBCASE("constant feature is zeroed and reported") {
    Dataset ds;
    ds.points.resize(3, 2);
    ds.points << 5, 1, 5, 2, 5, 3;
    const StandardizeResult res = standardize(ds);
    CHECK(res.zero_variance_features == std::vector<Index>{0});
    CHECK(res.data.points.col(0).norm() == 0.0);
  }
  SUBCASE("columns end up centered with unit population variance") {
    Dataset ds;
    ds.points = testsupport::gaussian_matrix(100, 5, 12);
    ds.points.col(3) *= 40.0;
    ds.points.col(1).array() += 7.0;
    const StandardizeResult res = standardize(ds);
    const Index n = 100;
    for (Index c = 0; c < 5; ++c) {
      const double mean = res.data.points.col(c).mean();
      const double var = res.data.points.col(c).squaredNorm() / n -
                         mean * mean;
      CHECK(std::abs(mean) <= 1e-13);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    }
    const StandardizeResult twice = standardize(res.data);
    CHECK((twice.data.points - res.data.points).norm() <= 1e-12 * res.data.points.norm());
  }
}

TEST_CASE("subsampling") {
  Dataset ds;
  ds.points = testsupport::gaussian_matrix(10, 3, 8);
  ds.labels = Vector<double>::LinSpaced(10, 0, 9);
  SUBCASE("taking everything preserves order") {
    const Dataset out = subsample(ds, 10, 4);
    CHECK((out.points - ds.points).norm() == 0.0);
    CHECK((*out.labels - *ds.labels).norm() == 0.0);
  }
  SUBCASE("row choice follows the documented sampler, ascending") {
    const std::uint64_t seed = 6;
    const Dataset out = subsample(ds, 3, seed);
    std::vector<long> pick = testsupport::oracle_sample(seed, 10, 3);
    std::sort(pick.begin(), pick.end());
    for (Index i = 0; i < 3; ++i) {
      CHECK((out.points.row(i) - ds.points.row(pick[static_cast<std::size_t>(i)])).norm() ==
            0.0);
      CHECK((*out.labels)(i) == (*ds.labels)(pick[static_cast<std::size_t>(i)]));
    }
  }
  SUBCASE("bounds checked") {
    CHECK_THROWS_AS(subsample(ds, 0, 1), Error);
    CHECK_THROWS_AS(subsample(ds, 11, 1), Error);
  }
}

TEST_CASE("rbf kernel") {
  SUBCASE("unit diagonal and the e^-1 distance") {
    const double sigma = 0.7;
    Dataset ds;
    ds.points.resize(2, 2);
    ds.points << 0, 0, sigma * std::sqrt(2.0), 0;
    const SymMatrix<double> k = rbf_kernel(ds, KernelSpec{sigma});
    CHECK(k(0, 0) == 1.0);
    CHECK(k(1, 1) == 1.0);
    CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  }
  SUBCASE("three points against hand-computed entries") {
    Dataset ds;
    ds.points.resize(3, 2);
    ds.points << 0, 0, 1, 0, 0, 2;
    const SymMatrix<double> k = rbf_kernel(ds, KernelSpec{1.0});
    CHECK(k(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(k(0, 2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(k(1, 2) == doctest::Approx(std::exp(-2.5)).epsilon(1e-15));
  }
  SUBCASE("gram matrix is numerically positive semidefinite") {
    Dataset ds;
    ds.points = testsupport::gaussian_matrix(40, 4, 21);
    const SymMatrix<double> k = rbf_kernel(ds, KernelSpec{2.0});
    const Vector<double> spec = sym_spectrum(k);
    CHECK(spec(39) >= -1e-10 * 40);
  }
  SUBCASE("bandwidth validated") {
    Dataset ds;
    ds.points = Matrix<double>::Zero(2, 1);
    CHECK_THROWS_AS(rbf_kernel(ds, KernelSpec{0.0}), Error);
    CHECK_THROWS_AS(rbf_kernel(ds, KernelSpec{-1.0}), Error);
  }
}

TEST_CASE("sparse nearest-neighbor style generator") {
  const SymMatrix<double> a = gen_snn(1);
  REQUIRE(a.n() == 1000);
  SUBCASE("symmetric and numerically positive semidefinite") {
    CHECK((a.mat() - a.mat().transpose()).norm() == 0.0);
    const Vector<double> spec = sym_spectrum(a);
    CHECK(spec(999) >= -1e-12 * spec(0));
    CHECK(spec(500) <= 1e-10 * spec(0));
    CHECK(spec(159) / spec(139) <= 1e-3);
  }
  SUBCASE("bit-reproducible and seed-sensitive") {
    const SymMatrix<double> b = gen_snn(1);
    CHECK((a.mat() - b.mat()).norm() == 0.0);
    const SymMatrix<double> c = gen_snn(2);
    CHECK((a.mat() - c.mat()).norm() > 0.0);
  }
}

TEST_CASE("diagonal counterexample family") {
  SUBCASE("entries are exact") {
    const SymMatrix<double> a = gen_diag_counterexample(1e-8);
    CHECK(a.n() == 3);
    CHECK(a(0, 0) == 1.0);
    CHECK(a(1, 1) == 1e-8 * 1e-8);
    CHECK(a(2, 2) == 0.0);
    const SymMatrix<double> b = gen_diag_counterexample(1.0);
    CHECK(b(1, 1) == 1.0);
  }
  SUBCASE("gamma validated") {
    CHECK_THROWS_AS(gen_diag_counterexample(0.0), Error);
    CHECK_THROWS_AS(gen_diag_counterexample(1.5), Error);
    CHECK_THROWS_AS(gen_diag_counterexample(std::nan("")), Error);
  }
  SUBCASE("power-of-two gamma makes plain reconstruction exact") {
    const SymMatrix<double> a = gen_diag_counterexample(0.5);
    const SymMatrix<double> ahat = densify(nystrom_plain(a, make_set({0, 1}, 3)));
    CHECK((a.mat() - ahat.mat()).norm() == 0.0);
  }
}

TEST_CASE("prescribed-spectrum generator") {
  SUBCASE("flat spectrum gives the identity") {
    const SymMatrix<double> a = gen_spsd_spectrum(4, {1, 1, 1, 1}, 3);
    CHECK((a.mat() - Matrix<double>::Identity(4, 4)).norm() <= 1e-12);
  }
  SUBCASE("spectrum round-trips through the eigensolver") {
    const std::vector<double> sv = {2.0, 1.0, 0.25, 1e-5};
    const SymMatrix<double> a = gen_spsd_spectrum(7, sv, 9);
    const Vector<double> spec = sym_spectrum(a);
    for (std::size_t i = 0; i < sv.size(); ++i)
      CHECK(spec(static_cast<Index>(i)) == doctest::Approx(sv[i]).epsilon(1e-12));
    for (Index i = 4; i < 7; ++i) CHECK(std::abs(spec(i)) <= 1e-12 * sv[0]);
  }
  SUBCASE("reproducible per seed") {
    const SymMatrix<double> a = gen_spsd_spectrum(5, {1, 0.5}, 11);
    const SymMatrix<double> b = gen_spsd_spectrum(5, {1, 0.5}, 11);
    CHECK((a.mat() - b.mat()).norm() == 0.0);
  }
  SUBCASE("invalid spectra rejected") {
    CHECK_THROWS_AS(gen_spsd_spectrum(3, {}, 1), Error);
    CHECK_THROWS_AS(gen_spsd_spectrum(3, {1, 2}, 1), Error);
    CHECK_THROWS_AS(gen_spsd_spectrum(3, {1, -0.5}, 1), Error);
    CHECK_THROWS_AS(gen_spsd_spectrum(2, {1, 0.5, 0.2}, 1), Error);
    CHECK_THROWS_AS(gen_spsd_spectrum(0, {1}, 1), Error);
    CHECK_THROWS_AS(gen_spsd_spectrum(4000, {1}, 1), Error);
  }
}

}  // TEST_SUITE
