#include "qgbec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>

#include "qgbec/csv.hpp"
#include "qgbec/error.hpp"

namespace qgbec {

namespace {

constexpr double pi = std::numbers::pi;

// Coefficient rows for the two columns of one edge: boundary value and inward
// derivative at x = 0 and at x = l.
struct EndData {
  std::array<double, 2> value0, deriv0, value_l, deriv_l;
  EdgeBasis basis;
};

EndData end_data(double energy, double length) {
  EndData d{};
  if (energy >= 0.0) {
    const double k = std::sqrt(energy);
    const double kl = k * length;
    const double sinc_l = k == 0.0 ? length : std::sin(kl) / k;
    d.basis = EdgeBasis::trigonometric;
    d.value0 = {1.0, 0.0};
    d.deriv0 = {0.0, 1.0};
    d.value_l = {std::cos(kl), sinc_l};
    d.deriv_l = {k * std::sin(kl), -std::cos(kl)};
    return d;
  }
  const double kappa = std::sqrt(-energy);
  const double x = kappa * length;
  if (x <= 1.0) {
    d.basis = EdgeBasis::hyperbolic;
    d.value0 = {1.0, 0.0};
    d.deriv0 = {0.0, 1.0};
    d.value_l = {std::cosh(x), std::sinh(x) / kappa};
    d.deriv_l = {-kappa * std::sinh(x), -std::cosh(x)};
    return d;
  }
  const double q = std::exp(-x);
  d.basis = EdgeBasis::exponential;
  d.value0 = {1.0, q};
  d.deriv0 = {-kappa, kappa * q};
  d.value_l = {q, 1.0};
  d.deriv_l = {kappa * q, -kappa};
  return d;
}

double wavenumber(double energy) { return std::sqrt(std::abs(energy)); }

struct Svd {
  Eigen::VectorXd singular;
  CMatrix v;
};

Svd svd_of(const CMatrix& m, bool with_v) {
  Eigen::JacobiSVD<CMatrix> svd(m, with_v ? Eigen::ComputeFullV : 0);
  return {svd.singularValues(), with_v ? CMatrix(svd.matrixV()) : CMatrix()};
}

EdgeFunction edge_function_from(EdgeBasis basis, double energy, double length, Complex c1, Complex c2) {
  const double k = wavenumber(energy);
  const Complex i(0.0, 1.0);
  // Below k l ~ 1e-7 the exponential split cancels; the linear form is exact to O((kl)^2).
  if (basis != EdgeBasis::exponential && k * length < 1e-7) return {ExpTerm::linear(c1, c2)};
  switch (basis) {
    case EdgeBasis::trigonometric:
      return {ExpTerm::exponential(0.5 * c1 + c2 / (2.0 * i * k), i * k),
              ExpTerm::exponential(0.5 * c1 - c2 / (2.0 * i * k), -i * k)};
    case EdgeBasis::hyperbolic:
      return {ExpTerm::exponential(0.5 * (c1 + c2 / k), k), ExpTerm::exponential(0.5 * (c1 - c2 / k), -k)};
    case EdgeBasis::exponential:
      return {ExpTerm::exponential(c1, -k), ExpTerm::exponential(c2, k, -k * length)};
  }
  return {};
}

OneParticleState state_from_coefficients(const MetricGraph& graph, const SecularMatrix& sec, const CVector& v) {
  OneParticleState s;
  s.pieces.reserve(graph.edge_count());
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const double l = graph.edges()[e].length;
    const Complex c1 = v(2 * e) / sec.column_scale[2 * e];
    const Complex c2 = v(2 * e + 1) / sec.column_scale[2 * e + 1];
    s.pieces.push_back({edge_function_from(sec.basis[e], sec.energy, l, c1, c2), 0.0, l});
  }
  return s;
}

double golden_minimize(const std::function<double(double)>& f, double a, double b, double x_tol, double& f_min) {
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 400 && (b - a) > x_tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    if (c >= d) break;  // no representable interior points left
  }
  if (fc < fd) {
    f_min = fc;
    return c;
  }
  f_min = fd;
  return d;
}

// Global position of each edge end in the vertex-major boundary vector.
std::vector<std::size_t> end_positions(const MetricGraph& graph) {
  std::vector<std::size_t> pos(2 * graph.edge_count());
  std::size_t row = 0;
  for (std::size_t v = 0; v < graph.vertex_count(); ++v)
    for (const EdgeEnd& end : graph.ends_at(v)) pos[2 * end.edge + std::size_t(end.side)] = row++;
  return pos;
}

double l_max_of(const MetricGraph& graph, const VertexConditions& conds) {
  return validate_conditions(graph, conds).l_max;
}

struct SecularEval {
  double gap = 0.0;
  double norm = 0.0;
  int small = 0;  // singular values below threshold * norm
};

SecularEval evaluate_secular(const MetricGraph& graph, const VertexConditions& conds, double energy,
                             double threshold) {
  const SecularMatrix sec = assemble_secular(graph, conds, energy);
  const Svd s = svd_of(sec.matrix, false);
  SecularEval r;
  r.norm = s.singular(0);
  r.gap = s.singular(s.singular.size() - 1);
  for (Eigen::Index i = 0; i < s.singular.size(); ++i)
    if (s.singular(i) <= threshold * r.norm) ++r.small;
  return r;
}

// Brackets and clusters of eigenvalues located by exact counting in energy.
void isolate_by_count(const std::function<std::size_t(double)>& count, double lo, double hi, std::size_t c_lo,
                      std::size_t c_hi, double tol, std::vector<Level>& out) {
  if (c_hi <= c_lo) return;
  if (hi - lo <= tol) {
    out.push_back({0.5 * (lo + hi), int(c_hi - c_lo)});
    return;
  }
  const double mid = 0.5 * (lo + hi);
  if (mid <= lo || mid >= hi) {
    out.push_back({mid, int(c_hi - c_lo)});
    return;
  }
  const std::size_t c_mid = count(mid);
  isolate_by_count(count, lo, mid, c_lo, std::clamp(c_mid, c_lo, c_hi), tol, out);
  isolate_by_count(count, mid, hi, std::clamp(c_mid, c_lo, c_hi), c_hi, tol, out);
}

void merge_levels(std::vector<Level>& levels, double tol) {
  std::sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) { return a.energy < b.energy; });
  std::vector<Level> merged;
  for (const Level& l : levels) {
    if (!merged.empty() && std::abs(l.energy - merged.back().energy) <= tol) {
      merged.back().multiplicity = std::max(merged.back().multiplicity, l.multiplicity);
      continue;
    }
    merged.push_back(l);
  }
  levels = std::move(merged);
}

std::size_t total(const std::vector<Level>& levels) {
  std::size_t n = 0;
  for (const auto& l : levels) n += std::size_t(l.multiplicity);
  return n;
}

// Refines a root of the secular gap in the wavenumber variable t (k or kappa).
struct RootRefiner {
  const MetricGraph& graph;
  const VertexConditions& conds;
  double sign;  // +1: E = t^2, -1: E = -t^2
  double threshold;

  double energy(double t) const { return sign * t * t; }
  double gap(double t) const { return evaluate_secular(graph, conds, energy(t), threshold).gap; }

  // Returns true and appends a level when the bracket holds an eigenvalue.
  bool refine(double a, double b, double e_tol, std::vector<Level>& out) const {
    const double t_mid = 0.5 * (a + b);
    const double t_tol = std::max(e_tol / (2.0 * std::max(t_mid, 1e-3)), 4e-16 * std::max(1.0, b));
    auto accept = [&](double lo, double hi) {
      double g = 0.0;
      const double t = golden_minimize([&](double x) { return gap(x); }, lo, hi, t_tol, g);
      const SecularEval ev = evaluate_secular(graph, conds, energy(t), threshold);
      if (ev.gap > threshold * ev.norm) return false;
      out.push_back({energy(t), std::max(ev.small, 1)});
      return true;
    };
    if (accept(a, b)) return true;
    // The gap is the minimum over singular branches and need not be unimodal;
    // look for a narrower dip inside the bracket.
    constexpr int sub = 32;
    std::vector<double> ts(sub + 1), gs(sub + 1);
    for (int i = 0; i <= sub; ++i) {
      ts[std::size_t(i)] = a + (b - a) * double(i) / sub;
      gs[std::size_t(i)] = gap(ts[std::size_t(i)]);
    }
    bool found = false;
    for (std::size_t i = 0; i <= sub; ++i) {
      const bool left = i == 0 || gs[i] < gs[i - 1];
      const bool right = i == sub || gs[i] <= gs[i + 1];
      if (left && right) found = accept(ts[i == 0 ? 0 : i - 1], ts[i == sub ? sub : i + 1]) || found;
    }
    return found;
  }
};

std::vector<Level> scan_wavenumbers(const RootRefiner& refiner, double t_max, double step, double e_tol,
                                    bool include_origin) {
  const auto n = std::max<std::size_t>(2, std::size_t(std::ceil(t_max / step)));
  std::vector<double> t(n + 1), g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    t[i] = t_max * double(i) / double(n);
    g[i] = refiner.gap(t[i]);
  }
  std::vector<Level> found;
  bool origin = false;
  if (include_origin) {
    const SecularEval ev = evaluate_secular(refiner.graph, refiner.conds, 0.0, refiner.threshold);
    origin = ev.gap <= refiner.threshold * ev.norm;
    if (origin) found.push_back({0.0, std::max(ev.small, 1)});
  }
  for (std::size_t i = 1; i <= n; ++i) {
    const bool left = g[i] < g[i - 1];
    const bool right = i == n || g[i] <= g[i + 1];
    if (!left || !right) continue;
    const double a = t[i - 1];
    const double b = i == n ? t[n] : t[i + 1];
    std::vector<Level> cand;
    if (!refiner.refine(a, b, e_tol, cand)) continue;
    // Roots that slide onto k = 0 (or kappa = 0) belong to the zero eigenvalue.
    if (std::abs(cand[0].energy) <= 1e-24) continue;
    if (origin && std::sqrt(std::abs(cand[0].energy)) < 1e-3 * step) continue;
    found.push_back(cand[0]);
  }
  merge_levels(found, std::max(e_tol * 10.0, 1e-14));
  return found;
}

// Upward nudge off the edge Dirichlet spectra, where the vertex form has poles.
double nudged_energy(const MetricGraph& graph, double energy) {
  if (energy <= 0.0) return energy;
  double k = std::sqrt(energy);
  for (int attempt = 0; attempt < 60; ++attempt) {
    bool ok = true;
    for (const Edge& e : graph.edges()) ok = ok && std::abs(std::sin(k * e.length)) > 1e-7;
    if (ok) break;
    k *= 1.0 + 1e-9;
  }
  return k * k;
}

}  // namespace

std::size_t Spectrum::count() const { return total(levels); }

std::vector<double> Spectrum::expanded() const {
  std::vector<double> out;
  for (const auto& l : levels)
    for (int m = 0; m < l.multiplicity; ++m) out.push_back(l.energy);
  return out;
}

SecularMatrix assemble_secular(const MetricGraph& graph, const VertexConditions& conds, double energy) {
  const auto n = static_cast<Eigen::Index>(2 * graph.edge_count());
  SecularMatrix sec;
  sec.energy = energy;
  sec.wavenumber = wavenumber(energy);
  sec.matrix = CMatrix::Zero(n, n);
  sec.basis.resize(graph.edge_count());

  std::vector<EndData> data(graph.edge_count());
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    data[e] = end_data(energy, graph.edges()[e].length);
    sec.basis[e] = data[e].basis;
  }

  Eigen::Index row0 = 0;
  for (std::size_t v = 0; v < graph.vertex_count(); ++v) {
    const auto& ends = graph.ends_at(v);
    const VertexBlock& block = conds.blocks[v];
    const auto d = static_cast<Eigen::Index>(ends.size());
    const CMatrix a = block.P + block.L;
    const CMatrix b = CMatrix::Identity(d, d) - block.P;
    for (Eigen::Index j = 0; j < d; ++j) {
      const EdgeEnd& end = ends[static_cast<std::size_t>(j)];
      const EndData& ed = data[end.edge];
      const auto& value = end.side == 0 ? ed.value0 : ed.value_l;
      const auto& deriv = end.side == 0 ? ed.deriv0 : ed.deriv_l;
      for (int c = 0; c < 2; ++c) {
        const auto col = static_cast<Eigen::Index>(2 * end.edge) + c;
        for (Eigen::Index i = 0; i < d; ++i) sec.matrix(row0 + i, col) += a(i, j) * value[c] + b(i, j) * deriv[c];
      }
    }
    row0 += d;
  }

  // Scale by the full boundary data of each basis function, not by the matrix
  // column: a column may vanish exactly at an eigenvalue.
  sec.column_scale.resize(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const EndData& ed = data[e];
    for (int c = 0; c < 2; ++c) {
      const double s = std::sqrt(ed.value0[c] * ed.value0[c] + ed.deriv0[c] * ed.deriv0[c] +
                                 ed.value_l[c] * ed.value_l[c] + ed.deriv_l[c] * ed.deriv_l[c]);
      sec.column_scale[2 * e + std::size_t(c)] = s;
      sec.matrix.col(static_cast<Eigen::Index>(2 * e) + c) /= s;
    }
  }
  return sec;
}

double secular_gap(const MetricGraph& graph, const VertexConditions& conds, double energy) {
  const Svd s = svd_of(assemble_secular(graph, conds, energy).matrix, false);
  return s.singular(s.singular.size() - 1);
}

std::size_t count_below(const MetricGraph& graph, const VertexConditions& conds, double energy) {
  energy = nudged_energy(graph, energy);
  const auto n = static_cast<Eigen::Index>(2 * graph.edge_count());
  const std::vector<std::size_t> pos = end_positions(graph);

  std::size_t dirichlet = 0;
  CMatrix form = CMatrix::Zero(n, n);
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const double l = graph.edges()[e].length;
    double diag = 0.0, off = 0.0;
    if (energy > 0.0) {
      const double k = std::sqrt(energy);
      const double x = k * l;
      diag = k * std::cos(x) / std::sin(x);
      off = -k / std::sin(x);
      // Edge Dirichlet eigenvalues j pi / l strictly below k.
      dirichlet += std::size_t(std::max(0.0, std::ceil(x / pi) - 1.0));
    } else if (energy == 0.0) {
      diag = 1.0 / l;
      off = -1.0 / l;
    } else {
      const double kappa = std::sqrt(-energy);
      const double x = kappa * l;
      diag = x < 1e-8 ? 1.0 / l : kappa / std::tanh(x);
      off = x < 1e-8 ? -1.0 / l : (x > 700.0 ? 0.0 : -kappa / std::sinh(x));
    }
    const auto p0 = static_cast<Eigen::Index>(pos[2 * e]);
    const auto p1 = static_cast<Eigen::Index>(pos[2 * e + 1]);
    form(p0, p0) += diag;
    form(p1, p1) += diag;
    form(p0, p1) += off;
    form(p1, p0) += off;
  }

  // Subtract L and restrict to ker P, block by block.
  std::vector<CVector> kernel_basis;
  Eigen::Index row0 = 0;
  for (std::size_t v = 0; v < graph.vertex_count(); ++v) {
    const VertexBlock& block = conds.blocks[v];
    const Eigen::Index d = block.P.rows();
    form.block(row0, row0, d, d) -= block.L;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (block.P + block.P.adjoint()));
    for (Eigen::Index i = 0; i < d; ++i) {
      if (eig.eigenvalues()(i) > 0.5) continue;
      CVector col = CVector::Zero(n);
      col.segment(row0, d) = eig.eigenvectors().col(i);
      kernel_basis.push_back(col);
    }
    row0 += d;
  }
  if (kernel_basis.empty()) return dirichlet;
  CMatrix k(n, static_cast<Eigen::Index>(kernel_basis.size()));
  for (std::size_t i = 0; i < kernel_basis.size(); ++i) k.col(static_cast<Eigen::Index>(i)) = kernel_basis[i];
  const CMatrix q = k.adjoint() * form * k;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (q + q.adjoint()), Eigen::EigenvaluesOnly);
  // Natural size of the form entries; entries near the edge Dirichlet poles are much
  // larger and must not inflate the zero threshold.
  double scale = std::max(1.0, std::sqrt(std::abs(energy)));
  for (const Edge& e : graph.edges()) scale = std::max(scale, 1.0 / e.length);
  for (const VertexBlock& b : conds.blocks) scale = std::max(scale, b.L.cwiseAbs().maxCoeff());
  std::size_t negative = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    if (eig.eigenvalues()(i) < -1e-10 * scale) ++negative;
  return dirichlet + negative;
}

Spectrum eigenvalues_negative(const MetricGraph& graph, const VertexConditions& conds, const ScanOptions& options) {
  Spectrum spec;
  spec.tolerance = options.tolerance;
  spec.range_max = 0.0;
  const double l_max = l_max_of(graph, conds);
  if (l_max <= 0.0) return spec;

  // Any eigenvalue satisfies -E <= 2 L_max max(2 / l_min, L_max).
  const double kappa_bound = std::sqrt(2.0 * l_max * std::max(2.0 / graph.min_length(), l_max));
  const double kappa_hi = std::max(l_max + 1.0, kappa_bound) * 1.05;
  spec.range_min = -kappa_hi * kappa_hi;

  const std::size_t expected = count_below(graph, conds, 0.0);
  const RootRefiner refiner{graph, conds, -1.0, options.multiplicity_threshold};
  double step = kappa_hi / 2000.0 * options.step_factor;
  for (int attempt = 0; attempt <= options.max_step_halvings; ++attempt, step *= 0.5) {
    std::vector<Level> found = scan_wavenumbers(refiner, kappa_hi, step, options.tolerance, false);
    if (total(found) == expected) {
      spec.levels = std::move(found);
      std::sort(spec.levels.begin(), spec.levels.end(), [](auto& a, auto& b) { return a.energy < b.energy; });
      return spec;
    }
  }
  if (!options.allow_count_fallback)
    throw Error(ErrorCode::numerical_failure, "negative spectrum scan did not resolve all eigenvalues");

  std::vector<Level> clusters;
  auto count = [&](double e) { return count_below(graph, conds, e); };
  isolate_by_count(count, spec.range_min, 0.0, count(spec.range_min), expected, options.tolerance, clusters);
  for (Level& c : clusters) {
    // Polish each cluster on the secular gap within its bracket.
    const double kappa = std::sqrt(-c.energy);
    const double w = std::max(1e-9, 1e-9 * kappa);
    std::vector<Level> polished;
    if (refiner.refine(std::max(0.0, kappa - w), kappa + w, options.tolerance, polished))
      c.energy = polished[0].energy;
  }
  if (total(clusters) != expected)
    throw Error(ErrorCode::numerical_failure, "negative spectrum count mismatch after isolation");
  spec.levels = std::move(clusters);
  merge_levels(spec.levels, 0.0);
  return spec;
}

double weyl_bound(const MetricGraph& graph) { return double(2 * graph.edge_count() + graph.vertex_count()); }

double weyl_deviation(const MetricGraph& graph, const Spectrum& spectrum, double k_max) {
  const double length = graph.total_length();
  std::size_t below = 0;
  double dev = 0.0;
  for (const Level& l : spectrum.levels) {
    if (l.energy < 0.0) {
      below += std::size_t(l.multiplicity);
      continue;
    }
    const double k = std::sqrt(l.energy);
    if (k > k_max) break;
    const double weyl = length * k / pi;
    dev = std::max(dev, std::abs(double(below) - weyl));
    below += std::size_t(l.multiplicity);
    dev = std::max(dev, std::abs(double(below) - weyl));
  }
  dev = std::max(dev, std::abs(double(below) - length * k_max / pi));
  return dev;
}

Spectrum eigenvalues_positive(const MetricGraph& graph, const VertexConditions& conds, double k_max,
                              const ScanOptions& options) {
  if (!(k_max > 0.0)) throw Error(ErrorCode::validation_failure, "k_max must be positive");
  if (!(options.tolerance > 0.0)) throw Error(ErrorCode::validation_failure, "tolerance must be positive");
  Spectrum spec;
  spec.tolerance = options.tolerance;
  spec.range_min = 0.0;
  spec.range_max = k_max * k_max;

  const std::size_t negatives = count_below(graph, conds, 0.0);
  const double e_top = k_max * k_max * (1.0 + 1e-12) + 1e-300;
  const std::size_t expected = count_below(graph, conds, e_top) - negatives;

  const RootRefiner refiner{graph, conds, +1.0, options.multiplicity_threshold};
  double step = pi / (4.0 * graph.total_length()) * options.step_factor;
  for (int attempt = 0; attempt <= options.max_step_halvings; ++attempt, step *= 0.5) {
    std::vector<Level> found = scan_wavenumbers(refiner, k_max, step, options.tolerance, true);
    Spectrum trial = spec;
    trial.levels.clear();
    if (negatives > 0) trial.levels.push_back({-1.0, int(negatives)});  // placeholder for the Weyl count
    trial.levels.insert(trial.levels.end(), found.begin(), found.end());
    const bool weyl_ok = weyl_deviation(graph, trial, k_max) <= weyl_bound(graph);
    if (total(found) == expected && weyl_ok) {
      spec.levels = std::move(found);
      return spec;
    }
  }
  if (!options.allow_count_fallback)
    throw Error(ErrorCode::numerical_failure, "positive spectrum scan too coarse (Weyl or count check failed)");

  std::vector<Level> clusters;
  auto count = [&](double e) { return count_below(graph, conds, e) - negatives; };
  const double lo = -1e-12;
  isolate_by_count(count, lo, e_top, 0, expected, options.tolerance, clusters);
  const SecularEval at_zero = evaluate_secular(graph, conds, 0.0, options.multiplicity_threshold);
  const bool origin = at_zero.gap <= options.multiplicity_threshold * at_zero.norm;
  const double base_step = pi / (4.0 * graph.total_length());
  for (Level& c : clusters) {
    const double k = std::sqrt(std::max(0.0, c.energy));
    // Counting is blurred near E = 0 and near edge Dirichlet poles, so polish in a wider window.
    if (origin && k < 1e-3 * base_step) {
      c.energy = 0.0;
      continue;
    }
    const double w = 1e-6 * std::max(1.0, k);
    std::vector<Level> polished;
    if (k > w && refiner.refine(k - w, k + w, options.tolerance, polished)) c.energy = polished[0].energy;
    if (k <= w) c.energy = 0.0;
  }
  if (total(clusters) != expected)
    throw Error(ErrorCode::numerical_failure, "positive spectrum count mismatch after isolation");
  spec.levels = std::move(clusters);
  merge_levels(spec.levels, 0.0);
  return spec;
}

Spectrum spectrum_up_to(const MetricGraph& graph, const VertexConditions& conds, double e_max,
                        const ScanOptions& options) {
  Spectrum neg = eigenvalues_negative(graph, conds, options);
  Spectrum out;
  out.tolerance = options.tolerance;
  out.range_min = neg.levels.empty() ? 0.0 : neg.range_min;
  out.range_max = e_max;
  for (const Level& l : neg.levels)
    if (l.energy <= e_max) out.levels.push_back(l);
  if (e_max >= 0.0) {
    const double k_max = std::max(std::sqrt(e_max), 1e-8);
    Spectrum pos = eigenvalues_positive(graph, conds, k_max, options);
    out.levels.insert(out.levels.end(), pos.levels.begin(), pos.levels.end());
  }
  return out;
}

Complex inner_product(const OneParticleState& a, const OneParticleState& b) {
  Complex s(0.0, 0.0);
  for (std::size_t e = 0; e < a.pieces.size(); ++e) {
    const double lo = std::max(a.pieces[e].lo, b.pieces[e].lo);
    const double hi = std::min(a.pieces[e].hi, b.pieces[e].hi);
    if (hi > lo) s += overlap(a.pieces[e].f, b.pieces[e].f, lo, hi);
  }
  return s;
}

double norm_squared(const OneParticleState& s) {
  double n = 0.0;
  for (const auto& p : s.pieces)
    if (p.hi > p.lo) n += mass(p.f, p.lo, p.hi);
  return n;
}

namespace {

OneParticleState scaled_state(const OneParticleState& s, Complex factor) {
  OneParticleState r = s;
  for (auto& p : r.pieces) p.f = scaled(p.f, factor);
  return r;
}

// Phase making the largest sampled value real positive.
Complex canonical_phase(const MetricGraph& graph, const OneParticleState& s) {
  Complex best(0.0, 0.0);
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const double l = graph.edges()[e].length;
    for (double x : {0.0, 0.5 * l, l}) {
      const Complex v = evaluate(s.pieces[e].f, x);
      if (std::abs(v) > std::abs(best) * (1.0 + 1e-9)) best = v;
    }
  }
  if (std::abs(best) == 0.0) return {1.0, 0.0};
  return std::conj(best) / std::abs(best);
}

struct NullSpace {
  SecularMatrix sec;
  std::vector<CVector> vectors;
  double residual = 0.0;
};

NullSpace null_space(const MetricGraph& graph, const VertexConditions& conds, double energy, int multiplicity) {
  NullSpace ns;
  ns.sec = assemble_secular(graph, conds, energy);
  const Svd s = svd_of(ns.sec.matrix, true);
  const Eigen::Index n = s.singular.size();
  const int m = std::clamp(multiplicity, 1, int(n));
  for (int i = 0; i < m; ++i) ns.vectors.push_back(s.v.col(n - 1 - i));
  ns.residual = s.singular(n - 1);
  return ns;
}

}  // namespace

std::vector<OneParticleState> eigenfunctions(const MetricGraph& graph, const VertexConditions& conds, double energy,
                                             int multiplicity) {
  const NullSpace ns = null_space(graph, conds, energy, multiplicity);
  std::vector<OneParticleState> out;
  for (const CVector& v : ns.vectors) {
    OneParticleState s = state_from_coefficients(graph, ns.sec, v);
    for (const auto& prev : out) {
      const Complex c = inner_product(prev, s);
      for (std::size_t e = 0; e < s.pieces.size(); ++e) {
        EdgeFunction sub = scaled(prev.pieces[e].f, -c);
        s.pieces[e].f.insert(s.pieces[e].f.end(), sub.begin(), sub.end());
      }
    }
    const double n2 = norm_squared(s);
    if (!(n2 > 0.0)) throw Error(ErrorCode::numerical_failure, "eigenfunction with vanishing norm");
    s = scaled_state(s, 1.0 / std::sqrt(n2));
    if (out.empty()) s = scaled_state(s, canonical_phase(graph, s));
    out.push_back(std::move(s));
  }
  return out;
}

GroundState ground_state(const MetricGraph& graph, const VertexConditions& conds, const ScanOptions& options) {
  Level lowest;
  const Spectrum neg = eigenvalues_negative(graph, conds, options);
  if (!neg.levels.empty()) {
    lowest = neg.levels.front();
  } else {
    double k_max = 2.0 * pi / graph.total_length();
    for (int attempt = 0;; ++attempt) {
      const Spectrum pos = eigenvalues_positive(graph, conds, k_max, options);
      if (!pos.levels.empty()) {
        lowest = pos.levels.front();
        break;
      }
      if (attempt > 40) throw Error(ErrorCode::numerical_failure, "no eigenvalue found for the ground state");
      k_max *= 2.0;
    }
  }

  GroundState gs;
  gs.energy = lowest.energy;
  gs.multiplicity = lowest.multiplicity;
  gs.degenerate = lowest.multiplicity > 1;
  const NullSpace ns = null_space(graph, conds, gs.energy, 1);
  gs.residual = ns.residual;

  OneParticleState s = state_from_coefficients(graph, ns.sec, ns.vectors[0]);
  const double n2 = norm_squared(s);
  Complex factor = 1.0 / std::sqrt(n2);
  factor *= canonical_phase(graph, scaled_state(s, factor));
  gs.state = scaled_state(s, factor);
  gs.norm = std::sqrt(norm_squared(gs.state));

  const double k = wavenumber(gs.energy);
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const double l = graph.edges()[e].length;
    const Complex c1 = factor * ns.vectors[0](2 * e) / ns.sec.column_scale[2 * e];
    const Complex c2 = factor * ns.vectors[0](2 * e + 1) / ns.sec.column_scale[2 * e + 1];
    Complex a, b;
    switch (ns.sec.basis[e]) {
      case EdgeBasis::trigonometric:
        a = c1;
        b = k * l < 1e-7 ? c2 : c2 / k;
        break;
      case EdgeBasis::hyperbolic:
        a = 0.5 * (c1 - c2 / k);
        b = 0.5 * (c1 + c2 / k);
        break;
      case EdgeBasis::exponential:
        a = c1;
        b = c2 * std::exp(-k * l);
        break;
    }
    gs.a.push_back(a);
    gs.b.push_back(b);
  }
  return gs;
}

double state_window_mass(const MetricGraph& graph, const OneParticleState& state, std::size_t edge, double x1,
                         double x2) {
  if (edge >= graph.edge_count()) throw Error(ErrorCode::validation_failure, "window on unknown edge");
  const double l = graph.edges()[edge].length;
  if (!(x1 >= 0.0 && x1 < x2 && x2 <= l)) throw Error(ErrorCode::validation_failure, "window outside edge");
  const EdgePiece& p = state.pieces[edge];
  const double lo = std::max(x1, p.lo), hi = std::min(x2, p.hi);
  return hi > lo ? mass(p.f, lo, hi) : 0.0;
}

OneParticleState restrict_state(const OneParticleState& state, const std::vector<std::pair<double, double>>& windows) {
  OneParticleState r = state;
  for (std::size_t e = 0; e < r.pieces.size(); ++e) {
    r.pieces[e].lo = std::max(r.pieces[e].lo, windows[e].first);
    r.pieces[e].hi = std::min(r.pieces[e].hi, windows[e].second);
    if (r.pieces[e].hi < r.pieces[e].lo) r.pieces[e].hi = r.pieces[e].lo;
  }
  return r;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum) {
  out << "index,E,multiplicity\n";
  std::size_t i = 0;
  for (const Level& l : spectrum.levels) out << i++ << ',' << format_double(l.energy) << ',' << l.multiplicity << '\n';
}

void write_ground_state_csv(std::ostream& out, const GroundState& ground) {
  out << "edge,a_re,a_im,b_re,b_im,E0\n";
  for (std::size_t e = 0; e < ground.a.size(); ++e)
    out << e << ',' << format_double(ground.a[e].real()) << ',' << format_double(ground.a[e].imag()) << ','
        << format_double(ground.b[e].real()) << ',' << format_double(ground.b[e].imag()) << ','
        << format_double(ground.energy) << '\n';
}

}  // namespace qgbec
