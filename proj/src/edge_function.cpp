#include "qgbec/edge_function.hpp"

#include <cmath>

#include "qgbec/error.hpp"

namespace qgbec {

namespace {

// phi_q(z) = int_0^1 u^q e^{z u} du for q = 0..degree, assuming Re z <= 0.
std::array<Complex, ExpTerm::max_degree + 1> moment_kernels(Complex z, int degree) {
  std::array<Complex, ExpTerm::max_degree + 1> phi{};
  if (std::abs(z) < 2.0) {
    // sum_n z^n / (n! (n + q + 1)); terms fall below 1e-18 well before n = 40.
    for (int q = 0; q <= degree; ++q) {
      Complex term(1.0, 0.0), sum(0.0, 0.0);
      for (int n = 0; n < 60; ++n) {
        const Complex add = term / double(n + q + 1);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= z / double(n + 1);
      }
      phi[q] = sum;
    }
    return phi;
  }
  const Complex ez = std::exp(z);
  phi[0] = (ez - 1.0) / z;
  for (int q = 1; q <= degree; ++q) phi[q] = (ez - double(q) * phi[q - 1]) / z;
  return phi;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

}  // namespace

ExpTerm ExpTerm::exponential(Complex coefficient, Complex rate, Complex offset) {
  ExpTerm t;
  t.rate = rate;
  t.offset = offset;
  t.poly[0] = coefficient;
  return t;
}

ExpTerm ExpTerm::linear(Complex constant, Complex slope) {
  ExpTerm t;
  t.poly[0] = constant;
  t.poly[1] = slope;
  t.degree = slope == Complex(0.0, 0.0) ? 0 : 1;
  return t;
}

ExpTerm conj(const ExpTerm& t) {
  ExpTerm r = t;
  r.rate = std::conj(t.rate);
  r.offset = std::conj(t.offset);
  for (auto& c : r.poly) c = std::conj(c);
  return r;
}

ExpTerm operator*(const ExpTerm& a, const ExpTerm& b) {
  if (a.degree + b.degree > ExpTerm::max_degree)
    throw Error(ErrorCode::numerical_failure, "edge function product exceeds polynomial degree 4");
  ExpTerm r;
  r.rate = a.rate + b.rate;
  r.offset = a.offset + b.offset;
  r.degree = a.degree + b.degree;
  for (int i = 0; i <= a.degree; ++i)
    for (int j = 0; j <= b.degree; ++j) r.poly[i + j] += a.poly[i] * b.poly[j];
  return r;
}

Complex evaluate(const ExpTerm& t, double x) {
  Complex p = t.poly[t.degree];
  for (int i = t.degree - 1; i >= 0; --i) p = p * x + t.poly[i];
  return p * std::exp(t.rate * x + t.offset);
}

Complex integrate(const ExpTerm& t, double a, double b) {
  const double h = b - a;
  if (h == 0.0) return {0.0, 0.0};
  // Expand around the end where |exp| is largest so the remaining factor decays.
  const bool from_right = t.rate.real() > 0.0;
  const double c = from_right ? b : a;
  const double sigma = from_right ? -1.0 : 1.0;

  // poly(c + sigma t) as a polynomial in t.
  std::array<Complex, ExpTerm::max_degree + 1> shifted{};
  for (int q = 0; q <= t.degree; ++q) {
    Complex s(0.0, 0.0);
    double cpow = 1.0;
    for (int m = q; m <= t.degree; ++m) {
      s += binomial(m, q) * t.poly[m] * cpow;
      cpow *= c;
    }
    shifted[q] = s * std::pow(sigma, q);
  }

  const auto phi = moment_kernels(sigma * t.rate * h, t.degree);
  Complex sum(0.0, 0.0);
  double hpow = h;
  for (int q = 0; q <= t.degree; ++q) {
    sum += shifted[q] * hpow * phi[q];
    hpow *= h;
  }
  return sum * std::exp(t.rate * c + t.offset);
}

Complex evaluate(const EdgeFunction& f, double x) {
  Complex s(0.0, 0.0);
  for (const auto& t : f) s += evaluate(t, x);
  return s;
}

EdgeFunction scaled(const EdgeFunction& f, Complex factor) {
  EdgeFunction r = f;
  for (auto& t : r)
    for (auto& c : t.poly) c *= factor;
  return r;
}

EdgeFunction conj_product(const EdgeFunction& f, const EdgeFunction& g) {
  EdgeFunction r;
  r.reserve(f.size() * g.size());
  for (const auto& a : f)
    for (const auto& b : g) r.push_back(conj(a) * b);
  return r;
}

EdgeFunction product(const EdgeFunction& f, const EdgeFunction& g) {
  EdgeFunction r;
  r.reserve(f.size() * g.size());
  for (const auto& a : f)
    for (const auto& b : g) r.push_back(a * b);
  return r;
}

Complex integrate(const EdgeFunction& f, double a, double b) {
  Complex s(0.0, 0.0);
  for (const auto& t : f) s += integrate(t, a, b);
  return s;
}

Complex overlap(const EdgeFunction& f, const EdgeFunction& g, double a, double b) {
  Complex s(0.0, 0.0);
  for (const auto& x : f)
    for (const auto& y : g) s += integrate(conj(x) * y, a, b);
  return s;
}

double mass(const EdgeFunction& f, double a, double b) { return overlap(f, f, a, b).real(); }

}  // namespace qgbec
