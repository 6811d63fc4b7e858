#pragma once

#include <array>
#include <complex>
#include <vector>

namespace qgbec {

using Complex = std::complex<double>;

/// poly(x) * exp(rate * x + offset) on one edge, poly of degree <= 4.
///
/// Every eigenfunction piece used in this library is a short sum of such terms
/// (trigonometric, hyperbolic, decaying exponential or linear), and so is any
/// product of up to four of them. Offsets are chosen so that |exp(rate*x+offset)|
/// stays <= 1 on the edge, which keeps closed-form integrals free of overflow.
struct ExpTerm {
  static constexpr int max_degree = 4;

  Complex rate{0.0, 0.0};
  Complex offset{0.0, 0.0};
  std::array<Complex, max_degree + 1> poly{};
  int degree = 0;

  static ExpTerm exponential(Complex coefficient, Complex rate, Complex offset = {});
  static ExpTerm linear(Complex constant, Complex slope);
};

ExpTerm conj(const ExpTerm& t);
ExpTerm operator*(const ExpTerm& a, const ExpTerm& b);
Complex evaluate(const ExpTerm& t, double x);

/// Exact integral over [a, b].
Complex integrate(const ExpTerm& t, double a, double b);

using EdgeFunction = std::vector<ExpTerm>;

Complex evaluate(const EdgeFunction& f, double x);
EdgeFunction scaled(const EdgeFunction& f, Complex factor);

/// All pairwise products conj(f_i) * g_j.
EdgeFunction conj_product(const EdgeFunction& f, const EdgeFunction& g);
EdgeFunction product(const EdgeFunction& f, const EdgeFunction& g);

Complex integrate(const EdgeFunction& f, double a, double b);

/// Integral of conj(f) g over [a, b].
Complex overlap(const EdgeFunction& f, const EdgeFunction& g, double a, double b);

/// Integral of |f|^2 over [a, b].
double mass(const EdgeFunction& f, double a, double b);

}  // namespace qgbec
