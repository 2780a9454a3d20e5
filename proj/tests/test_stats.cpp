#include "fcnet/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fcnet/errors.hpp"
#include "test_support.hpp"

using namespace fcnet;

TEST_CASE("regularized incomplete beta against closed forms") {
  // I_x(1,1) = x
  for (double x : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    CHECK(regularized_incomplete_beta(x, 1, 1) ==
          doctest::Approx(x).epsilon(1e-12));
  }
  // I_x(1/2,1/2) = (2/pi) asin(sqrt(x))
  for (double x : {0.05, 0.3, 0.5, 0.8, 0.95}) {
    const double expected = 2.0 / std::numbers::pi * std::asin(std::sqrt(x));
    CHECK(regularized_incomplete_beta(x, 0.5, 0.5) ==
          doctest::Approx(expected).epsilon(1e-11));
  }
  // boundary values
  CHECK(regularized_incomplete_beta(0.0, 3, 4) == 0.0);
  CHECK(regularized_incomplete_beta(1.0, 3, 4) == 1.0);
}

TEST_CASE("incomplete beta reflection symmetry") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed);
    const double x = rng.uniform(0.01, 0.99);
    const double a = rng.uniform(0.2, 8.0);
    const double b = rng.uniform(0.2, 8.0);
    const double lhs = regularized_incomplete_beta(x, a, b);
    const double rhs = 1.0 - regularized_incomplete_beta(1.0 - x, b, a);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("welch t-test frozen example") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 3, 4, 5, 6};
  const auto r = welch_ttest(a, b);
  CHECK(r.t == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.df == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.34659350708733416).epsilon(1e-10));
}

TEST_CASE("welch t-test trivia and symmetry") {
  const std::vector<double> a{3, 1, 4, 1, 5};
  const auto same = welch_ttest(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == doctest::Approx(1.0).epsilon(1e-14));

  const std::vector<double> b{2, 7, 1, 8, 2};
  const auto ab = welch_ttest(a, b);
  const auto ba = welch_ttest(b, a);
  CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-14));
  CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-13));
}

TEST_CASE("welch degenerate zero-variance branches") {
  const std::vector<double> flat1{2, 2, 2};
  const std::vector<double> flat2{2, 2, 2, 2};
  const std::vector<double> flat3{5, 5, 5};
  CHECK(welch_ttest(flat1, flat2).p == 1.0);
  CHECK(welch_ttest(flat1, flat3).p == 0.0);
  CHECK_THROWS_AS(welch_ttest(std::vector<double>{1}, flat1), InputError);
}

TEST_CASE("welch p-values stay in range on random inputs") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto a = testsup::random_normal_vector(5 + seed % 20, seed * 3 + 1);
    const auto b = testsup::random_normal_vector(5 + seed % 13, seed * 3 + 2);
    const auto r = welch_ttest(a, b);
    CHECK(r.p >= 0.0);
    CHECK(r.p <= 1.0);
    CHECK(r.df > 0.0);
  }
}
