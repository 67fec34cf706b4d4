#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gel/quadrature.hpp"

using namespace gel;

TEST_CASE("gauss_hermite node symmetry is exact") {
  for (int order : {3, 7, 21, 101}) {
    const HermiteRule rule = gauss_hermite(order);
    REQUIRE(rule.nodes.size() == static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
      CHECK(rule.nodes[i] == -rule.nodes[order - 1 - i]);
      CHECK(rule.weights[i] == rule.weights[order - 1 - i]);
    }
    if (order % 2 == 1) CHECK(rule.nodes[order / 2] == 0.0L);
    for (int i = 1; i < order; ++i) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
  }
}

TEST_CASE("gauss_hermite weights are a probability rule") {
  const HermiteRule rule = gauss_hermite(41);
  long double sum = 0.0L;
  for (long double w : rule.weights) sum += w;
  CHECK(std::abs(static_cast<double>(sum - 1.0L)) <= 1e-15);
}

TEST_CASE("gauss_hermite integrates Gaussian moments") {
  const HermiteRule rule = gauss_hermite(21);
  CHECK(gauss_expectation([](double) { return 1.0; }, rule) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(gauss_expectation([](double z) { return z * z; }, rule) - 1.0) <= 1e-13);
  CHECK(std::abs(gauss_expectation([](double z) { return z * z * z * z; }, rule) - 3.0) <= 1e-13);
  CHECK(std::abs(gauss_expectation([](double z) { return std::pow(z, 6); }, rule) - 15.0) <= 1e-12);
}

TEST_CASE("odd integrands cancel exactly") {
  const HermiteRule rule = gauss_hermite(101);
  CHECK(gauss_expectation([](double z) { return z * z * z; }, rule) == 0.0);
  CHECK(gauss_expectation([](double z) { return std::sin(z); }, rule) == 0.0);
  CHECK(gauss_expectation([](double z) { return std::tanh(z); }, rule) == 0.0);
}

TEST_CASE("gauss_hermite rejects bad orders") {
  CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
  CHECK_THROWS_AS(gauss_hermite(-5), std::invalid_argument);
}

TEST_CASE("adaptive_simpson basics") {
  CHECK(std::abs(adaptive_simpson([](double x) { return std::sin(x); }, 0.0,
                                  3.14159265358979323846) - 2.0) <= 1e-10);
  CHECK(adaptive_simpson([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
  // orientation
  const double fwd = adaptive_simpson([](double x) { return x * x; }, 0.0, 1.0);
  const double rev = adaptive_simpson([](double x) { return x * x; }, 1.0, 0.0);
  CHECK(fwd == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(rev == -fwd);
}
