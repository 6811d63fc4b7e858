#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "qgbec/metric_graph.hpp"
#include "qgbec/spectral.hpp"

namespace qgbec {

/// Canonical ideal Bose gas over a finite list of one-particle levels.
struct CanonicalEnsemble {
  double beta = 1.0;
  int particles = 0;
  double shift = 0.0;              // E0; levels are stored as E - E0 >= 0
  std::vector<double> levels;      // one entry per state (multiplicity expanded)
  std::vector<double> log_z;       // log Z_k for k = 0..N, shifted energies
};

/// Z_N = (1/N) sum_k Z_1(k beta) Z_{N-k} in log form. `energies` lists states
/// (repeat degenerate levels); they are shifted by their minimum internally.
CanonicalEnsemble canonical_log_partition(const std::vector<double>& energies, int particles, double beta);

/// <n_j> for state j of the ensemble.
double mean_occupation(const CanonicalEnsemble& ensemble, std::size_t state);

/// (1 / (beta L)) log Z_N with the energy shift restored.
double free_energy_density(const CanonicalEnsemble& ensemble, double total_length);

/// States with beta (E - E0) <= 40, repeated by multiplicity. The spectrum must
/// start at the ground level.
std::vector<double> thermal_levels(const Spectrum& spectrum, double beta);

/// Spectrum from the ground level up to E0 + 40 / beta.
Spectrum thermal_spectrum(const MetricGraph& graph, const VertexConditions& conds, double beta,
                          const ScanOptions& options = {});

struct BecClass {
  bool condenses = false;
  double l_max = 0.0;
};

/// Condensation happens iff some L block has an eigenvalue above 1e-12.
BecClass classify_bec(const MetricGraph& graph, const VertexConditions& conds);

struct SweepRow {
  unsigned n = 1;
  double length = 0.0;
  int particles = 0;
  double e0 = 0.0;
  double occ0_density = 0.0;
  double free_energy_density = 0.0;
  double extrapolated = 0.0;  // from this row and up to two rows before it
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double extrapolated() const { return rows.empty() ? 0.0 : rows.back().extrapolated; }
};

/// Supplies the thermal spectrum of the graph scaled by n (lets callers cache).
using SpectrumProvider = std::function<Spectrum(unsigned n, const MetricGraph& scaled, double beta)>;

struct SweepOptions {
  unsigned threads = 1;
  ScanOptions scan;
  SpectrumProvider spectrum;  // defaults to thermal_spectrum
};

/// Polynomial extrapolation in 1/n to 1/n = 0 through the given points.
double extrapolate_in_inverse_n(const std::vector<unsigned>& n, const std::vector<double>& values);

/// Ground-state occupation density along the rescaling n -> n l_e with
/// N = round(rho n L_1). Throws degenerate_ground_state if the lowest level is
/// degenerate at any n.
SweepResult condensate_sweep(const MetricGraph& graph, const VertexConditions& conds, double rho, double beta,
                             const std::vector<unsigned>& n_list, const SweepOptions& options = {});

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

}  // namespace qgbec
