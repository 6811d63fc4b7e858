#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qgbec/metric_graph.hpp"
#include "qgbec/spectral.hpp"

namespace qgbec {

enum class PotentialFamily { smooth_scaled, windowed_constant, delta };

PotentialFamily parse_potential_family(const std::string& name);
std::string to_string(PotentialFamily family);

struct PotentialParams {
  double alpha = 1.0;          // L1 mass (smooth_scaled, delta)
  double epsilon = 0.0;        // windowed_constant height
  double half_width = 0.0;     // windowed_constant A
  double delta = 0.3;          // cutoff exponent
  double gamma = 0.05;
  std::function<double(double)> profile;  // smooth_scaled V on [-1, 1]; default is a C-infinity bump
};

/// Repulsive pair potential U_L. For smooth_scaled, U(x) = L V(L x) with V
/// rescaled to mass alpha; A_L = 1 / (2L) and eps_L = L min_{|x|<=1/2} V.
struct InteractionPotential {
  PotentialFamily family = PotentialFamily::delta;
  double alpha = 0.0;
  double scale = 1.0;         // L
  double half_width = 0.0;    // A_L
  double floor = 0.0;         // eps_L
  double support = 0.0;       // U vanishes for |x| > support
  double delta = 0.3;
  double gamma = 0.05;
  // eps_L A_L^3 = O(L^(3 delta + gamma - 1)); for windowed_constant both are constant.
  double window_exponent = 0.0;  // growth exponent of eps_L A_L^3 in L
  bool admissible = true;
  std::function<double(double)> shape;  // V normalised to mass alpha (smooth_scaled)

  double operator()(double x) const;
};

InteractionPotential make_potential(PotentialFamily family, const PotentialParams& params, double total_length);

/// <ij|U|kl> = sum_e int int conj(phi_i(x) phi_j(y)) U(x - y) phi_k(x) phi_l(y), same edge only.
struct PairTensor {
  std::size_t m = 0;
  std::vector<Complex> values;

  Complex& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return values[((i * m + j) * m + k) * m + l];
  }
  Complex operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return values[((i * m + j) * m + k) * m + l];
  }
};

/// Delta family: closed-form per-edge integrals of conj(phi_i phi_j) phi_k phi_l.
/// Other families: Gauss-Legendre panels of width <= A_L / 4, halved until two
/// successive results agree to 1e-8.
PairTensor two_body_tensor(const MetricGraph& graph, const std::vector<OneParticleState>& basis,
                           const InteractionPotential& potential, unsigned threads = 1);

/// The first m eigenpairs (energies ascending, multiplicity expanded).
struct OneParticleBasis {
  std::vector<double> energies;
  std::vector<OneParticleState> states;
};

OneParticleBasis lowest_eigenpairs(const MetricGraph& graph, const VertexConditions& conds, std::size_t m,
                                   const ScanOptions& options = {});

std::size_t occupation_dimension(std::size_t modes, int particles);

struct ManyBodyProblem {
  int particles = 2;
  std::size_t modes = 0;
  std::vector<double> one_body;            // epsilon_i
  std::vector<std::vector<int>> states;    // sorted mode lists, one per occupation basis vector
  CMatrix hamiltonian;
  double total_length = 1.0;
};

constexpr std::size_t dimension_cap = 5000;

/// H = sum_i eps_i n_i + 1/2 sum V_ijkl a*_i a*_j a_l a_k on symmetric N-boson states.
ManyBodyProblem assemble_hamiltonian(int particles, const std::vector<double>& one_body, const PairTensor& tensor,
                                     double total_length);

struct GibbsState {
  double beta = 1.0;
  CMatrix gamma;              // gamma_pq = omega(a*_p a_q)
  double mean_energy = 0.0;   // omega(H_N)
  double ground_energy = 0.0;
  double total_length = 1.0;
};

GibbsState gibbs_reduced_density(const ManyBodyProblem& problem, double beta);

/// Coefficients <phi_p, Phi>.
CVector expand_in_basis(const std::vector<OneParticleState>& basis, const OneParticleState& state);

struct Observables {
  double occupation = 0.0;      // omega(a*(Phi) a(Phi))
  double energy_density = 0.0;  // omega(H_N) / L
};

Observables observables(const GibbsState& state, const CVector& coefficients);

struct CutoffOccupations {
  double width = 0.0;                    // l_min^delta
  std::array<double, 3> norms{};         // ||Phi_i||^2
  std::array<double, 3> occupations{};
  std::array<double, 3> densities{};     // occupation / L
  double cross_excess = 0.0;             // max(0, |omega(a*(Phi_i) a(Phi_j))| - sqrt(occ_i occ_j))
};

/// Splits Phi_0 into the windows [0, w], [l_e - w, l_e] and the middle, w = l_min^delta.
CutoffOccupations cutoff_occupations(const GibbsState& state, const MetricGraph& graph,
                                     const std::vector<OneParticleState>& basis, const OneParticleState& ground,
                                     double delta);

struct InteractingSweepConfig {
  int particles = 2;
  double beta = 1.0;
  std::size_t basis_size = 20;
  PotentialFamily family = PotentialFamily::delta;
  PotentialParams params;
  std::vector<unsigned> n_list;
  unsigned threads = 1;
  ScanOptions scan;
};

struct InteractingRow {
  unsigned n = 1;
  double length = 0.0;
  int particles = 2;
  double alpha = 0.0;
  double beta = 1.0;
  double occ0_density = 0.0;
  std::array<double, 3> occ_phi{};  // densities; NaN when the cutoff windows overlap
  double energy_density = 0.0;
  double ground_energy = 0.0;
};

std::vector<InteractingRow> interacting_sweep(const MetricGraph& graph, const VertexConditions& conds,
                                              const InteractingSweepConfig& config);

void write_interacting_csv(std::ostream& out, const std::vector<InteractingRow>& rows);

/// Lowest eigenvalues of two bosons on one interval from a cell-centred finite
/// difference grid with Richardson extrapolation over h, 2h, 4h.
struct FdResult {
  std::vector<double> eigenvalues;                 // extrapolated
  std::array<std::vector<double>, 3> raw;          // at h, 2h, 4h
  double order = 0.0;                              // estimated convergence order of the lowest level
};

FdResult fd_oracle_two_boson(double length, const VertexBlock& left, const VertexBlock& right, double alpha,
                             double h, int count = 1);

}  // namespace qgbec
