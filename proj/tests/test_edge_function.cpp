#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qgbec/csv.hpp"
#include "qgbec/edge_function.hpp"

using namespace qgbec;

namespace {

Complex quad(const ExpTerm& t, double a, double b) {
  auto re = [&](double x) { return evaluate(t, x).real(); };
  auto im = [&](double x) { return evaluate(t, x).imag(); };
  using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
  return {Q::integrate(re, a, b, 8, 1e-13), Q::integrate(im, a, b, 8, 1e-13)};
}

}  // namespace

TEST_CASE("closed-form integrals agree with adaptive quadrature") {
  const Complex i(0.0, 1.0);
  const std::vector<ExpTerm> terms = {
      ExpTerm::exponential(1.0, 0.0),
      ExpTerm::exponential(2.0, -3.0),
      ExpTerm::exponential(0.5, 3.0, -6.0),
      ExpTerm::exponential(1.0 + i, 7.0 * i),
      ExpTerm::exponential(1.0, 1e-9),
      ExpTerm::linear(1.0, -0.25),
  };
  for (const auto& a : terms)
    for (const auto& b : terms) {
      if (a.degree + b.degree > ExpTerm::max_degree) continue;
      const ExpTerm t = a * b;
      for (auto [lo, hi] : {std::pair{0.0, 2.0}, std::pair{0.3, 0.31}, std::pair{1.0, 2.0}}) {
        const Complex exact = integrate(t, lo, hi);
        const Complex ref = quad(t, lo, hi);
        CHECK(std::abs(exact - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
      }
    }
}

TEST_CASE("quartic polynomial moments") {
  ExpTerm x2 = ExpTerm::linear(0.0, 1.0) * ExpTerm::linear(0.0, 1.0);
  const ExpTerm x4 = x2 * x2;
  CHECK(integrate(x4, 0.0, 2.0).real() == doctest::Approx(32.0 / 5.0).epsilon(1e-14));
  CHECK(integrate(x4 * ExpTerm::exponential(1.0, -40.0), 0.0, 1.0).real() ==
        doctest::Approx(24.0 / std::pow(40.0, 5)).epsilon(1e-10));
}

TEST_CASE("mass and overlap") {
  const EdgeFunction f = {ExpTerm::exponential(0.5, Complex(0, 2)), ExpTerm::exponential(0.5, Complex(0, -2))};
  // |cos 2x|^2 over [0, pi] is pi / 2.
  CHECK(mass(f, 0.0, M_PI) == doctest::Approx(M_PI / 2).epsilon(1e-14));
  const EdgeFunction g = {ExpTerm::linear(1.0, 0.0)};
  CHECK(std::abs(overlap(g, f, 0.0, M_PI)) < 1e-14);
}

TEST_CASE("csv number format") {
  CHECK(format_double(0.0) == "0.0");
  CHECK(format_double(-0.0) == "0.0");
  CHECK(format_double(1.0) == "1.0");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(std::stod(format_double(M_PI)) == M_PI);
  CHECK(format_double(std::nan("")) == "nan");
}
