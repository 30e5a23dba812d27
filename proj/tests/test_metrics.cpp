#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sdual/metrics.hpp"
#include "support/instances.hpp"

using namespace sdual;

TEST_CASE("gap closed branch values") {
  CHECK(gap_closed(1.0, 0.5, 0.5) == 0.0);
  CHECK(gap_closed(0.0, -1.0, -3.0) == doctest::Approx(2.0 / 3.0));
  CHECK(gap_closed(0.0, -3.0, -1.0) == doctest::Approx(-2.0 / 3.0));
  // division-by-zero convention: p == d2 with d1 > d2 closes the full gap
  CHECK(gap_closed(1.0, 0.0, 1.0) == -1.0);
  CHECK(gap_closed(1.0, 1.0, 0.0) == 1.0);
  CHECK_THROWS_AS(gap_closed(0.0, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("gap closed antisymmetry and sign on random triples") {
  std::mt19937 rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = testsup::rnd(rng, -5.0, 5.0);
    const double d1 = p - testsup::rnd(rng, 0.01, 10.0);
    const double d2 = p - testsup::rnd(rng, 0.01, 10.0);
    const double gc = gap_closed(p, d1, d2);
    CHECK(gc == doctest::Approx(-gap_closed(p, d2, d1)).epsilon(1e-12));
    CHECK(gc >= -1.0);
    CHECK(gc <= 1.0);
    if (d1 > d2) CHECK(gc > 0.0);
    if (d1 < d2) CHECK(gc < 0.0);
  }
}

TEST_CASE("shifted geometric mean") {
  CHECK(shifted_geomean({4.0, 4.0, 4.0}, 0.0) == doctest::Approx(4.0));
  CHECK(shifted_geomean({0.0, 10.0}, 10.0) == doctest::Approx(std::sqrt(200.0) - 10.0));
  CHECK(shifted_geomean({7.25}, 3.0) == doctest::Approx(7.25));
  CHECK_THROWS_AS(shifted_geomean({}, 1.0), std::invalid_argument);

  // s = 0 equals the geometric mean; monotone in each entry
  std::mt19937 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 5; ++i) v.push_back(testsup::rnd(rng, 0.1, 9.0));
    double prod = 1.0;
    for (double x : v) prod *= x;
    CHECK(shifted_geomean(v, 0.0) == doctest::Approx(std::pow(prod, 0.2)).epsilon(1e-10));
    std::vector<double> w = v;
    w[size_t(testsup::rnd_int(rng, 0, 4))] += testsup::rnd(rng, 0.1, 2.0);
    CHECK(shifted_geomean(w, 1.5) >= shifted_geomean(v, 1.5) - 1e-12);
  }
}

TEST_CASE("target bound closes 20 percent of the gap") {
  CHECK(target_bound(0.0, 10.0) == doctest::Approx(2.0));
  CHECK(target_bound(7.5, 7.5) == doctest::Approx(7.5));
  CHECK(target_bound(-5246.0, -4318.1) == doctest::Approx(-5060.42));
  CHECK_THROWS_AS(target_bound(1.0, 0.0), std::invalid_argument);
}
