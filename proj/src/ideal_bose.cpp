#include "qgbec/ideal_bose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "qgbec/csv.hpp"
#include "qgbec/error.hpp"

namespace qgbec {

namespace {

constexpr double boltzmann_cut = 40.0;

double log_sum_exp(const std::vector<double>& terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

void validate_sweep_inputs(double rho, double beta, const std::vector<unsigned>& n_list) {
  if (!(rho > 0.0)) throw Error(ErrorCode::validation_failure, "rho must be positive");
  if (!(beta > 0.0)) throw Error(ErrorCode::validation_failure, "beta must be positive");
  if (n_list.empty()) throw Error(ErrorCode::validation_failure, "n_list is empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] == 0) throw Error(ErrorCode::validation_failure, "n_list entries must be positive");
    if (i > 0 && n_list[i] <= n_list[i - 1])
      throw Error(ErrorCode::validation_failure, "n_list must be strictly ascending");
  }
}

}  // namespace

CanonicalEnsemble canonical_log_partition(const std::vector<double>& energies, int particles, double beta) {
  if (energies.empty()) throw Error(ErrorCode::validation_failure, "empty spectrum");
  if (particles < 0) throw Error(ErrorCode::validation_failure, "negative particle number");
  if (!(beta > 0.0)) throw Error(ErrorCode::validation_failure, "beta must be positive");

  CanonicalEnsemble ens;
  ens.beta = beta;
  ens.particles = particles;
  ens.shift = *std::min_element(energies.begin(), energies.end());
  ens.levels.reserve(energies.size());
  for (double e : energies) ens.levels.push_back(e - ens.shift);
  std::sort(ens.levels.begin(), ens.levels.end());

  // log Z_1(k beta); every term is <= 1 and the ground term equals 1.
  std::vector<double> log_z1(std::size_t(particles) + 1, 0.0);
  for (int k = 1; k <= particles; ++k) {
    double s = 0.0;
    for (double e : ens.levels) {
      const double w = std::exp(-double(k) * beta * e);
      if (w < 1e-16 * s) break;  // levels are sorted, the rest is smaller still
      s += w;
    }
    log_z1[std::size_t(k)] = std::log(s);
  }

  ens.log_z.assign(std::size_t(particles) + 1, 0.0);
  std::vector<double> terms;
  for (int n = 1; n <= particles; ++n) {
    terms.clear();
    for (int k = 1; k <= n; ++k) terms.push_back(log_z1[std::size_t(k)] + ens.log_z[std::size_t(n - k)]);
    ens.log_z[std::size_t(n)] = log_sum_exp(terms) - std::log(double(n));
  }
  return ens;
}

double mean_occupation(const CanonicalEnsemble& ens, std::size_t state) {
  if (state >= ens.levels.size()) throw Error(ErrorCode::validation_failure, "level index out of truncation");
  const int n = ens.particles;
  double s = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double t = -double(k) * ens.beta * ens.levels[state] + ens.log_z[std::size_t(n - k)] -
                     ens.log_z[std::size_t(n)];
    s += std::exp(t);
  }
  return s;
}

double free_energy_density(const CanonicalEnsemble& ens, double total_length) {
  const double log_z = ens.log_z.back() - double(ens.particles) * ens.beta * ens.shift;
  return log_z / (ens.beta * total_length);
}

std::vector<double> thermal_levels(const Spectrum& spectrum, double beta) {
  std::vector<double> out;
  if (spectrum.levels.empty()) return out;
  const double e0 = spectrum.levels.front().energy;
  for (const Level& l : spectrum.levels) {
    if (beta * (l.energy - e0) > boltzmann_cut) break;
    for (int m = 0; m < l.multiplicity; ++m) out.push_back(l.energy);
  }
  return out;
}

Spectrum thermal_spectrum(const MetricGraph& graph, const VertexConditions& conds, double beta,
                          const ScanOptions& options) {
  if (!(beta > 0.0)) throw Error(ErrorCode::validation_failure, "beta must be positive");
  const Spectrum neg = eigenvalues_negative(graph, conds, options);
  if (!neg.levels.empty()) return spectrum_up_to(graph, conds, neg.levels.front().energy + boltzmann_cut / beta, options);

  // Nonnegative spectrum: locate the ground level, then extend the window above it.
  double e_max = boltzmann_cut / beta;
  for (int attempt = 0; attempt < 60; ++attempt, e_max *= 2.0) {
    Spectrum s = spectrum_up_to(graph, conds, e_max, options);
    if (s.levels.empty()) continue;
    const double top = s.levels.front().energy + boltzmann_cut / beta;
    if (top <= e_max) return s;
    return spectrum_up_to(graph, conds, top, options);
  }
  throw Error(ErrorCode::numerical_failure, "no eigenvalue found for the thermal spectrum");
}

BecClass classify_bec(const MetricGraph& graph, const VertexConditions& conds) {
  const ConditionReport r = validate_conditions(graph, conds);
  return {r.positive_count > 0, r.l_max};
}

double extrapolate_in_inverse_n(const std::vector<unsigned>& n, const std::vector<double>& values) {
  // Neville's scheme evaluated at x = 0.
  std::vector<double> x, p = values;
  for (unsigned v : n) x.push_back(1.0 / double(v));
  const std::size_t m = p.size();
  for (std::size_t level = 1; level < m; ++level)
    for (std::size_t i = 0; i + level < m; ++i)
      p[i] = (x[i + level] * p[i] - x[i] * p[i + 1]) / (x[i + level] - x[i]);
  return p.empty() ? std::numeric_limits<double>::quiet_NaN() : p[0];
}

SweepResult condensate_sweep(const MetricGraph& graph, const VertexConditions& conds, double rho, double beta,
                             const std::vector<unsigned>& n_list, const SweepOptions& options) {
  validate_sweep_inputs(rho, beta, n_list);
  SpectrumProvider provider = options.spectrum;
  if (!provider) {
    const ScanOptions scan = options.scan;
    provider = [&conds, scan](unsigned, const MetricGraph& g, double b) { return thermal_spectrum(g, conds, b, scan); };
  }

  SweepResult result;
  result.rows.resize(n_list.size());
  std::vector<std::exception_ptr> failures(n_list.size());
  auto work = [&](std::size_t i) {
    try {
      const unsigned n = n_list[i];
      const MetricGraph g = scale(graph, n);
      const Spectrum spec = provider(n, g, beta);
      if (spec.levels.empty()) throw Error(ErrorCode::numerical_failure, "empty spectrum in sweep");
      if (spec.levels.front().multiplicity > 1)
        throw Error(ErrorCode::degenerate_ground_state,
                    "degenerate ground level at n = " + std::to_string(n) + "; break the symmetry of the graph");
      SweepRow& row = result.rows[i];
      row.n = n;
      row.length = g.total_length();
      row.particles = int(std::lround(rho * row.length));
      if (row.particles < 1) throw Error(ErrorCode::validation_failure, "rho * L rounds to zero particles");
      row.e0 = spec.levels.front().energy;
      const CanonicalEnsemble ens = canonical_log_partition(thermal_levels(spec, beta), row.particles, beta);
      row.occ0_density = mean_occupation(ens, 0) / row.length;
      row.free_energy_density = free_energy_density(ens, row.length);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, unsigned(n_list.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < n_list.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n_list.size(); i += threads) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);

  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const std::size_t first = i >= 2 ? i - 2 : 0;
    std::vector<unsigned> ns;
    std::vector<double> vs;
    for (std::size_t j = first; j <= i; ++j) {
      ns.push_back(result.rows[j].n);
      vs.push_back(result.rows[j].occ0_density);
    }
    result.rows[i].extrapolated = extrapolate_in_inverse_n(ns, vs);
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "n,L,N,E0,occ0_density,free_energy_density,extrapolated\n";
  for (const SweepRow& r : sweep.rows)
    out << r.n << ',' << format_double(r.length) << ',' << r.particles << ',' << format_double(r.e0) << ','
        << format_double(r.occ0_density) << ',' << format_double(r.free_energy_density) << ','
        << format_double(r.extrapolated) << '\n';
}

}  // namespace qgbec
