#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qgbec/edge_function.hpp"
#include "qgbec/metric_graph.hpp"

namespace qgbec {

struct Level {
  double energy = 0.0;
  int multiplicity = 1;
};

/// Sorted slice of the one-particle Laplacian spectrum.
struct Spectrum {
  std::vector<Level> levels;
  double range_min = 0.0;
  double range_max = 0.0;
  double tolerance = 1e-12;

  std::size_t count() const;  // with multiplicity
  /// Eigenvalues repeated by multiplicity.
  std::vector<double> expanded() const;
};

/// Per-edge piece of a one-particle state, supported on [lo, hi] of that edge.
struct EdgePiece {
  EdgeFunction f;
  double lo = 0.0;
  double hi = 0.0;
};

struct OneParticleState {
  std::vector<EdgePiece> pieces;  // one per edge
};

Complex inner_product(const OneParticleState& a, const OneParticleState& b);
double norm_squared(const OneParticleState& s);

/// How the two coefficient columns of an edge are interpreted at a given energy.
enum class EdgeBasis {
  trigonometric,  // cos(kx), sin(kx)/k   (E = k^2 >= 0; k = 0 gives 1, x)
  hyperbolic,     // cosh(kx), sinh(kx)/k (E = -k^2, k l_e <= 1)
  exponential,    // exp(-kx), exp(-k(l_e - x)) (E = -k^2, k l_e > 1)
};

/// Secular matrix at energy E; each column is divided by the norm of the
/// boundary data (values and derivatives at both ends) of its basis function.
struct SecularMatrix {
  double energy = 0.0;
  double wavenumber = 0.0;  // k for E >= 0, kappa for E < 0
  CMatrix matrix;
  std::vector<double> column_scale;
  std::vector<EdgeBasis> basis;      // per edge
};

SecularMatrix assemble_secular(const MetricGraph& graph, const VertexConditions& conds, double energy);

/// Smallest singular value of the scaled secular matrix; zero exactly
/// at eigenvalues.
double secular_gap(const MetricGraph& graph, const VertexConditions& conds, double energy);

/// Exact number of eigenvalues strictly below `energy`, by decoupling the edges
/// with Dirichlet conditions and counting negative eigenvalues of the vertex form
/// on ker P. Evaluation points on an edge Dirichlet eigenvalue are nudged upward
/// by a relative 1e-9.
std::size_t count_below(const MetricGraph& graph, const VertexConditions& conds, double energy);

struct ScanOptions {
  double tolerance = 1e-13;          // absolute eigenvalue tolerance
  double multiplicity_threshold = 1e-8;  // relative to the secular matrix norm
  int max_step_halvings = 3;
  double step_factor = 1.0;          // multiplies the default scan step (tests only)
  bool allow_count_fallback = true;  // isolate missed eigenvalues by exact counting
};

/// All eigenvalues in [0, k_max^2].
Spectrum eigenvalues_positive(const MetricGraph& graph, const VertexConditions& conds, double k_max,
                              const ScanOptions& options = {});

/// All eigenvalues below zero. Empty when every L block is negative semi-definite.
Spectrum eigenvalues_negative(const MetricGraph& graph, const VertexConditions& conds,
                              const ScanOptions& options = {});

/// Negative part plus [0, e_max].
Spectrum spectrum_up_to(const MetricGraph& graph, const VertexConditions& conds, double e_max,
                        const ScanOptions& options = {});

/// Largest |N(k) - L k / pi| over the jump points of the counting function up to k_max.
double weyl_deviation(const MetricGraph& graph, const Spectrum& spectrum, double k_max);
double weyl_bound(const MetricGraph& graph);  // 2E + V

/// Orthonormal eigenfunctions spanning the eigenspace of `energy`.
std::vector<OneParticleState> eigenfunctions(const MetricGraph& graph, const VertexConditions& conds,
                                             double energy, int multiplicity);

/// Lowest eigenpair. For E0 < 0 the coefficients are those of
/// phi_e(x) = a_e exp(-sqrt|E0| x) + b_e exp(+sqrt|E0| x); for E0 >= 0 they are
/// phi_e(x) = a_e cos(k x) + b_e sin(k x) (a_e + b_e x when E0 = 0).
struct GroundState {
  double energy = 0.0;
  std::vector<Complex> a;
  std::vector<Complex> b;
  OneParticleState state;
  double norm = 1.0;
  double residual = 0.0;  // smallest singular value of the scaled secular matrix
  bool degenerate = false;
  int multiplicity = 1;
};

GroundState ground_state(const MetricGraph& graph, const VertexConditions& conds,
                         const ScanOptions& options = {});

/// Integral of |phi_e|^2 over [x1, x2] on one edge (closed form).
double state_window_mass(const MetricGraph& graph, const OneParticleState& state, std::size_t edge,
                         double x1, double x2);

/// Restriction of `state` to [lo_e, hi_e] on every edge.
OneParticleState restrict_state(const OneParticleState& state, const std::vector<std::pair<double, double>>& windows);

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum);
void write_ground_state_csv(std::ostream& out, const GroundState& ground);

}  // namespace qgbec
