#include "qgbec/interacting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>
#include <unordered_map>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qgbec/csv.hpp"
#include "qgbec/error.hpp"

namespace qgbec {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::validation_failure, what); }

double bump(double x) { return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

// Eight-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::array<double, 8> x{}, w{};
  GaussRule() {
    using G = boost::math::quadrature::gauss<double, 8>;
    const auto& a = G::abscissa();
    const auto& b = G::weights();
    for (std::size_t i = 0; i < 4; ++i) {
      x[3 - i] = -a[i];
      w[3 - i] = b[i];
      x[4 + i] = a[i];
      w[4 + i] = b[i];
    }
  }
};

const GaussRule& gauss_rule() {
  static const GaussRule rule;
  return rule;
}

// Nodes and weights of composite rules on [a, b] with panels no wider than h.
void panel_nodes(double a, double b, double h, std::vector<double>& x, std::vector<double>& w) {
  if (!(b > a)) return;
  const auto panels = std::size_t(std::ceil((b - a) / h - 1e-12));
  const double width = (b - a) / double(std::max<std::size_t>(panels, 1));
  const GaussRule& g = gauss_rule();
  for (std::size_t p = 0; p < std::max<std::size_t>(panels, 1); ++p) {
    const double mid = a + (double(p) + 0.5) * width;
    for (std::size_t i = 0; i < 8; ++i) {
      x.push_back(mid + 0.5 * width * g.x[i]);
      w.push_back(0.5 * width * g.w[i]);
    }
  }
}

std::vector<double> breakpoints(std::vector<double> pts, double lo, double hi) {
  std::vector<double> out{lo, hi};
  for (double p : pts)
    if (p > lo && p < hi) out.push_back(p);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Row index (i, k) -> i * m + k of conj(phi_i) phi_k.
using PairMatrix = CMatrix;

PairMatrix quadrature_edge(const std::vector<const EdgeFunction*>& f, double l, const InteractionPotential& u,
                           double h) {
  const std::size_t m = f.size();
  const double s = u.support;
  std::vector<double> xs, wx;
  const auto xb = breakpoints({s, l - s}, 0.0, l);
  for (std::size_t i = 0; i + 1 < xb.size(); ++i) panel_nodes(xb[i], xb[i + 1], h, xs, wx);

  const auto mm = static_cast<Eigen::Index>(m * m);
  CMatrix left(mm, static_cast<Eigen::Index>(xs.size()));   // conj(phi_i) phi_k at x, times weight
  CMatrix right(mm, static_cast<Eigen::Index>(xs.size()));  // G_jl(x)
  std::vector<Complex> fx(m), fy(m);
  std::vector<double> rs, wr;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const double x = xs[n];
    for (std::size_t i = 0; i < m; ++i) fx[i] = evaluate(*f[i], x);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k)
        left(static_cast<Eigen::Index>(i * m + k), static_cast<Eigen::Index>(n)) = wx[n] * std::conj(fx[i]) * fx[k];

    rs.clear();
    wr.clear();
    const double r_lo = std::max(-s, x - l), r_hi = std::min(s, x);
    const auto rb = breakpoints({-u.half_width, u.half_width}, r_lo, r_hi);
    for (std::size_t i = 0; i + 1 < rb.size(); ++i) panel_nodes(rb[i], rb[i + 1], h, rs, wr);
    CVector g = CVector::Zero(mm);
    for (std::size_t q = 0; q < rs.size(); ++q) {
      const double weight = wr[q] * u(rs[q]);
      if (weight == 0.0) continue;
      const double y = x - rs[q];
      for (std::size_t j = 0; j < m; ++j) fy[j] = evaluate(*f[j], y);
      for (std::size_t j = 0; j < m; ++j) {
        const Complex cj = weight * std::conj(fy[j]);
        for (std::size_t ll = 0; ll < m; ++ll) g(static_cast<Eigen::Index>(j * m + ll)) += cj * fy[ll];
      }
    }
    right.col(static_cast<Eigen::Index>(n)) = g;
  }
  return left * right.transpose();
}

PairTensor tensor_from_pairs(const PairMatrix& t, std::size_t m) {
  PairTensor out;
  out.m = m;
  out.values.assign(m * m * m * m, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t l = 0; l < m; ++l)
          out(i, j, k, l) = t(static_cast<Eigen::Index>(i * m + k), static_cast<Eigen::Index>(j * m + l));
  return out;
}

PairTensor delta_tensor(const MetricGraph& graph, const std::vector<OneParticleState>& basis, double alpha,
                        unsigned threads) {
  const std::size_t m = basis.size();
  PairTensor out;
  out.m = m;
  out.values.assign(m * m * m * m, Complex(0.0, 0.0));
  if (alpha == 0.0) return out;

  // The value depends only on the multisets {i, j} and {k, l}; fill i <= j, k <= l.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) pairs.emplace_back(i, j);

  std::vector<std::vector<EdgeFunction>> conj_pair(pairs.size()), plain_pair(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
      const EdgeFunction& fi = basis[i].pieces[e].f;
      const EdgeFunction& fj = basis[j].pieces[e].f;
      EdgeFunction ci, cj;
      for (const auto& t : fi) ci.push_back(conj(t));
      for (const auto& t : fj) cj.push_back(conj(t));
      conj_pair[p].push_back(product(ci, cj));
      plain_pair[p].push_back(product(fi, fj));
    }
  }

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t a = first; a < pairs.size(); a += stride) {
      const auto [i, j] = pairs[a];
      for (std::size_t b = 0; b < pairs.size(); ++b) {
        const auto [k, l] = pairs[b];
        Complex v(0.0, 0.0);
        for (std::size_t e = 0; e < graph.edge_count(); ++e) {
          const EdgePiece& pi = basis[i].pieces[e];
          v += integrate(product(conj_pair[a][e], plain_pair[b][e]), pi.lo, pi.hi);
        }
        v *= alpha;
        out(i, j, k, l) = v;
        out(j, i, k, l) = v;
        out(i, j, l, k) = v;
        out(j, i, l, k) = v;
      }
    }
  };
  const unsigned t = std::max(1u, threads);
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < t; ++w) pool.emplace_back(work, w, t);
  work(0, t);
  for (auto& th : pool) th.join();
  return out;
}

template <class F>
void for_each_distinct(const std::vector<int>& state, F&& f) {
  for (std::size_t a = 0; a < state.size(); ++a)
    if (a == 0 || state[a] != state[a - 1]) f(state[a]);
}

// a_q |state>: returns sqrt(n_q) and removes one q.
double annihilate(std::vector<int>& state, int q) {
  const auto range = std::equal_range(state.begin(), state.end(), q);
  const auto count = range.second - range.first;
  if (count == 0) return 0.0;
  state.erase(range.first);
  return std::sqrt(double(count));
}

double create(std::vector<int>& state, int p) {
  const auto range = std::equal_range(state.begin(), state.end(), p);
  const auto count = range.second - range.first;
  state.insert(range.second, p);
  return std::sqrt(double(count + 1));
}

std::uint64_t state_key(const std::vector<int>& state, std::size_t modes) {
  std::uint64_t key = 0;
  for (int s : state) key = key * (modes + 1) + std::uint64_t(s + 1);
  return key;
}

void enumerate_states(std::size_t modes, int particles, int start, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
  if (int(cur.size()) == particles) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < int(modes); ++i) {
    cur.push_back(i);
    enumerate_states(modes, particles, i, cur, out);
    cur.pop_back();
  }
}

}  // namespace

PotentialFamily parse_potential_family(const std::string& name) {
  if (name == "smooth_scaled") return PotentialFamily::smooth_scaled;
  if (name == "windowed_constant") return PotentialFamily::windowed_constant;
  if (name == "delta") return PotentialFamily::delta;
  throw Error(ErrorCode::parse_failure, "unknown potential family '" + name + "'");
}

std::string to_string(PotentialFamily family) {
  switch (family) {
    case PotentialFamily::smooth_scaled: return "smooth_scaled";
    case PotentialFamily::windowed_constant: return "windowed_constant";
    case PotentialFamily::delta: return "delta";
  }
  return "unknown";
}

double InteractionPotential::operator()(double x) const {
  switch (family) {
    case PotentialFamily::smooth_scaled: {
      const double u = scale * x;
      return std::abs(u) < 1.0 ? scale * shape(u) : 0.0;
    }
    case PotentialFamily::windowed_constant:
      return std::abs(x) <= half_width ? floor : 0.0;
    case PotentialFamily::delta:
      break;
  }
  throw Error(ErrorCode::validation_failure, "delta potential has no pointwise values");
}

InteractionPotential make_potential(PotentialFamily family, const PotentialParams& params, double total_length) {
  if (!(params.delta > 0.0 && params.delta < 1.0 / 3.0)) invalid("cutoff exponent delta must lie in (0, 1/3)");
  if (!(params.gamma >= 0.0)) invalid("gamma must be nonnegative");
  if (params.gamma >= 1.0 - 3.0 * params.delta) invalid("gamma >= 1 - 3 delta");
  if (!(total_length > 0.0)) invalid("total length must be positive");

  InteractionPotential u;
  u.family = family;
  u.scale = total_length;
  u.delta = params.delta;
  u.gamma = params.gamma;
  switch (family) {
    case PotentialFamily::delta:
      if (!(params.alpha >= 0.0)) invalid("alpha must be nonnegative");
      u.alpha = params.alpha;
      return u;
    case PotentialFamily::windowed_constant:
      if (!(params.epsilon > 0.0) || !(params.half_width > 0.0)) invalid("window needs epsilon > 0 and A > 0");
      u.half_width = params.half_width;
      u.floor = params.epsilon;
      u.support = params.half_width;
      u.alpha = 2.0 * params.half_width * params.epsilon;
      u.window_exponent = 0.0;
      u.admissible = true;
      return u;
    case PotentialFamily::smooth_scaled:
      break;
  }

  if (!(params.alpha > 0.0)) invalid("alpha must be positive");
  const std::function<double(double)> profile = params.profile ? params.profile : bump;
  for (int i = 0; i <= 2000; ++i) {
    const double x = -1.0 + double(i) / 1000.0;
    const double v = profile(x);
    if (!(v >= 0.0)) invalid("profile V is negative somewhere");
    if (std::abs(v - profile(-x)) > 1e-12 * std::max(1.0, std::abs(v))) invalid("profile V is not even");
  }
  const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(profile, -1.0, 1.0, 15, 1e-14);
  if (!(mass > 0.0)) invalid("profile V has zero mass");
  const double factor = params.alpha / mass;
  u.alpha = params.alpha;
  u.shape = [profile, factor](double x) { return factor * profile(x); };
  u.support = 1.0 / total_length;
  u.half_width = 0.5 / total_length;
  double vmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) vmin = std::min(vmin, u.shape(-0.5 + double(i) / 1000.0));
  u.floor = total_length * vmin;
  // eps_L A_L^3 = L vmin / (8 L^3) grows like L^-2.
  u.window_exponent = -2.0;
  u.admissible = u.window_exponent <= 3.0 * params.delta + params.gamma - 1.0;
  return u;
}

PairTensor two_body_tensor(const MetricGraph& graph, const std::vector<OneParticleState>& basis,
                           const InteractionPotential& potential, unsigned threads) {
  const std::size_t m = basis.size();
  if (m == 0) invalid("empty one-particle basis");
  for (const auto& s : basis)
    if (s.pieces.size() != graph.edge_count()) invalid("basis state does not match the graph");
  if (potential.family == PotentialFamily::delta) return delta_tensor(graph, basis, potential.alpha, threads);

  const double h0 = potential.half_width / 4.0;
  PairMatrix total;
  double h = h0;
  PairMatrix previous;
  bool converged = false;
  for (int level = 0; level <= 5 && !converged; ++level, h *= 0.5) {
    PairMatrix t = PairMatrix::Zero(static_cast<Eigen::Index>(m * m), static_cast<Eigen::Index>(m * m));
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
      std::vector<const EdgeFunction*> f;
      for (const auto& s : basis) f.push_back(&s.pieces[e].f);
      t += quadrature_edge(f, graph.edges()[e].length, potential, h);
    }
    if (level > 0 && (t - previous).cwiseAbs().maxCoeff() <= 1e-8) converged = true;
    previous = std::move(t);
  }
  if (!converged) throw Error(ErrorCode::numerical_failure, "pair tensor quadrature did not converge to 1e-8");
  return tensor_from_pairs(previous, m);
}

OneParticleBasis lowest_eigenpairs(const MetricGraph& graph, const VertexConditions& conds, std::size_t m,
                                   const ScanOptions& options) {
  if (m == 0) invalid("basis size must be positive");
  const double length = graph.total_length();
  double e_max = std::pow(double(m + 2) * std::numbers::pi / length, 2.0);
  Spectrum spec;
  for (int attempt = 0; attempt < 40; ++attempt, e_max *= 2.0) {
    spec = spectrum_up_to(graph, conds, e_max, options);
    if (spec.count() >= m) break;
  }
  if (spec.count() < m) throw Error(ErrorCode::numerical_failure, "could not collect the requested basis");
  OneParticleBasis out;
  for (const Level& l : spec.levels) {
    if (out.states.size() >= m) break;
    for (auto& f : eigenfunctions(graph, conds, l.energy, l.multiplicity)) {
      if (out.states.size() >= m) break;
      out.energies.push_back(l.energy);
      out.states.push_back(std::move(f));
    }
  }
  return out;
}

std::size_t occupation_dimension(std::size_t modes, int particles) {
  // C(modes + N - 1, N)
  double c = 1.0;
  for (int i = 1; i <= particles; ++i) c = c * double(modes + std::size_t(i) - 1) / double(i);
  return std::size_t(std::llround(c));
}

ManyBodyProblem assemble_hamiltonian(int particles, const std::vector<double>& one_body, const PairTensor& tensor,
                                     double total_length) {
  if (particles != 2 && particles != 3) invalid("particle number must be 2 or 3");
  const std::size_t m = one_body.size();
  if (tensor.m != m) invalid("pair tensor does not match the basis size");
  const std::size_t dim = occupation_dimension(m, particles);
  if (dim > dimension_cap)
    throw Error(ErrorCode::dimension_cap, "occupation basis dimension " + std::to_string(dim) + " exceeds " +
                                              std::to_string(dimension_cap));

  ManyBodyProblem p;
  p.particles = particles;
  p.modes = m;
  p.one_body = one_body;
  p.total_length = total_length;
  std::vector<int> cur;
  enumerate_states(m, particles, 0, cur, p.states);
  std::unordered_map<std::uint64_t, Eigen::Index> index;
  for (std::size_t s = 0; s < p.states.size(); ++s) index[state_key(p.states[s], m)] = static_cast<Eigen::Index>(s);

  const auto d = static_cast<Eigen::Index>(p.states.size());
  p.hamiltonian = CMatrix::Zero(d, d);
  for (Eigen::Index col = 0; col < d; ++col) {
    const std::vector<int>& ket = p.states[static_cast<std::size_t>(col)];
    for (int s : ket) p.hamiltonian(col, col) += one_body[std::size_t(s)];
    for_each_distinct(ket, [&](int k) {
      std::vector<int> s1 = ket;
      const double a1 = annihilate(s1, k);
      for_each_distinct(s1, [&](int l) {
        std::vector<int> s2 = s1;
        const double a2 = annihilate(s2, l);
        for (int j = 0; j < int(m); ++j) {
          std::vector<int> s3 = s2;
          const double a3 = create(s3, j);
          for (int i = 0; i < int(m); ++i) {
            std::vector<int> s4 = s3;
            const double a4 = create(s4, i);
            const Eigen::Index row = index.at(state_key(s4, m));
            p.hamiltonian(row, col) +=
                0.5 * a1 * a2 * a3 * a4 * tensor(std::size_t(i), std::size_t(j), std::size_t(k), std::size_t(l));
          }
        }
      });
    });
  }
  return p;
}

GibbsState gibbs_reduced_density(const ManyBodyProblem& problem, double beta) {
  if (!(beta > 0.0)) invalid("beta must be positive");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(problem.hamiltonian);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::numerical_failure, "Hamiltonian diagonalisation failed");
  const Eigen::VectorXd& e = eig.eigenvalues();
  const CMatrix& v = eig.eigenvectors();
  const std::size_t m = problem.modes;

  // Transitions <row| a*_p a_q |col> with their amplitudes.
  struct Hop {
    Eigen::Index row, col;
    std::size_t p, q;
    double amp;
  };
  std::unordered_map<std::uint64_t, Eigen::Index> index;
  for (std::size_t s = 0; s < problem.states.size(); ++s)
    index[state_key(problem.states[s], m)] = static_cast<Eigen::Index>(s);
  std::vector<Hop> hops;
  for (std::size_t col = 0; col < problem.states.size(); ++col) {
    const std::vector<int>& ket = problem.states[col];
    for_each_distinct(ket, [&](int q) {
      std::vector<int> s1 = ket;
      const double a1 = annihilate(s1, q);
      for (int p = 0; p < int(m); ++p) {
        std::vector<int> s2 = s1;
        const double a2 = create(s2, p);
        hops.push_back({index.at(state_key(s2, m)), static_cast<Eigen::Index>(col), std::size_t(p), std::size_t(q),
                        a1 * a2});
      }
    });
  }

  GibbsState g;
  g.beta = beta;
  g.total_length = problem.total_length;
  g.ground_energy = e(0);
  g.gamma = CMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  double z = 0.0, energy = 0.0;
  for (Eigen::Index s = 0; s < e.size(); ++s) {
    if (beta * (e(s) - e(0)) > 40.0) break;  // eigenvalues ascend
    const double w = std::exp(-beta * (e(s) - e(0)));
    z += w;
    energy += w * e(s);
    for (const Hop& h : hops)
      g.gamma(static_cast<Eigen::Index>(h.p), static_cast<Eigen::Index>(h.q)) +=
          w * h.amp * std::conj(v(h.row, s)) * v(h.col, s);
  }
  g.gamma /= z;
  g.mean_energy = energy / z;
  return g;
}

CVector expand_in_basis(const std::vector<OneParticleState>& basis, const OneParticleState& state) {
  CVector c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t p = 0; p < basis.size(); ++p) {
    if (basis[p].pieces.size() != state.pieces.size()) invalid("state dimension mismatch");
    c(static_cast<Eigen::Index>(p)) = inner_product(basis[p], state);
  }
  return c;
}

namespace {

Complex gamma_form(const CMatrix& gamma, const CVector& c, const CVector& d) {
  // omega(a*(Phi) a(Psi)) = sum_pq c_p conj(d_q) gamma_pq
  return (c.transpose() * gamma * d.conjugate())(0, 0);
}

}  // namespace

Observables observables(const GibbsState& state, const CVector& coefficients) {
  if (coefficients.size() != state.gamma.rows()) invalid("coefficient vector does not match the basis");
  return {gamma_form(state.gamma, coefficients, coefficients).real(), state.mean_energy / state.total_length};
}

CutoffOccupations cutoff_occupations(const GibbsState& state, const MetricGraph& graph,
                                     const std::vector<OneParticleState>& basis, const OneParticleState& ground,
                                     double delta) {
  if (!(delta > 0.0 && delta < 1.0 / 3.0)) invalid("cutoff exponent delta must lie in (0, 1/3)");
  CutoffOccupations out;
  out.width = std::pow(graph.min_length(), delta);
  for (const Edge& e : graph.edges())
    if (!(out.width < 0.5 * e.length)) invalid("window overlap: l_min^delta >= l_e / 2");

  std::array<std::vector<std::pair<double, double>>, 3> windows;
  for (const Edge& e : graph.edges()) {
    windows[0].emplace_back(0.0, out.width);
    windows[1].emplace_back(e.length - out.width, e.length);
    windows[2].emplace_back(out.width, e.length - out.width);
  }
  std::array<CVector, 3> coeff;
  for (std::size_t i = 0; i < 3; ++i) {
    const OneParticleState part = restrict_state(ground, windows[i]);
    out.norms[i] = norm_squared(part);
    coeff[i] = expand_in_basis(basis, part);
    out.occupations[i] = gamma_form(state.gamma, coeff[i], coeff[i]).real();
    out.densities[i] = out.occupations[i] / state.total_length;
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double cross = std::abs(gamma_form(state.gamma, coeff[i], coeff[j]));
      const double bound = std::sqrt(std::max(0.0, out.occupations[i]) * std::max(0.0, out.occupations[j]));
      out.cross_excess = std::max(out.cross_excess, cross - bound);
    }
  return out;
}

std::vector<InteractingRow> interacting_sweep(const MetricGraph& graph, const VertexConditions& conds,
                                              const InteractingSweepConfig& config) {
  if (config.n_list.empty()) invalid("n_list is empty");
  for (std::size_t i = 0; i < config.n_list.size(); ++i) {
    if (config.n_list[i] == 0) invalid("n_list entries must be positive");
    if (i > 0 && config.n_list[i] <= config.n_list[i - 1]) invalid("n_list must be strictly ascending");
  }
  if (!(config.beta > 0.0)) invalid("beta must be positive");
  if (occupation_dimension(config.basis_size, config.particles) > dimension_cap)
    throw Error(ErrorCode::dimension_cap, "occupation basis dimension exceeds " + std::to_string(dimension_cap));

  std::vector<InteractingRow> rows(config.n_list.size());
  std::vector<std::exception_ptr> failures(rows.size());
  auto work = [&](std::size_t idx) {
    try {
      const unsigned n = config.n_list[idx];
      const MetricGraph g = scale(graph, n);
      const GroundState gs = ground_state(g, conds, config.scan);
      if (gs.degenerate)
        throw Error(ErrorCode::degenerate_ground_state, "degenerate ground level at n = " + std::to_string(n));
      const OneParticleBasis basis = lowest_eigenpairs(g, conds, config.basis_size, config.scan);
      const InteractionPotential u = make_potential(config.family, config.params, g.total_length());
      const PairTensor tensor = two_body_tensor(g, basis.states, u);
      const ManyBodyProblem problem = assemble_hamiltonian(config.particles, basis.energies, tensor, g.total_length());
      const GibbsState gibbs = gibbs_reduced_density(problem, config.beta);

      InteractingRow& row = rows[idx];
      row.n = n;
      row.length = g.total_length();
      row.particles = config.particles;
      row.alpha = u.alpha;
      row.beta = config.beta;
      const Observables obs = observables(gibbs, expand_in_basis(basis.states, gs.state));
      row.occ0_density = obs.occupation / row.length;
      row.energy_density = obs.energy_density;
      row.ground_energy = gibbs.ground_energy;
      try {
        const CutoffOccupations cut = cutoff_occupations(gibbs, g, basis.states, gs.state, config.params.delta);
        row.occ_phi = cut.densities;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::validation_failure) throw;
        row.occ_phi.fill(std::numeric_limits<double>::quiet_NaN());
      }
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, unsigned(rows.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < rows.size(); i += threads) work(i);
    });
  for (std::size_t i = 0; i < rows.size(); i += threads) work(i);
  for (auto& th : pool) th.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return rows;
}

void write_interacting_csv(std::ostream& out, const std::vector<InteractingRow>& rows) {
  out << "n,L,N,alpha,beta,occ0_density,occ_phi1,occ_phi2,occ_phi3,energy_density,ground_energy\n";
  for (const InteractingRow& r : rows)
    out << r.n << ',' << format_double(r.length) << ',' << r.particles << ',' << format_double(r.alpha) << ','
        << format_double(r.beta) << ',' << format_double(r.occ0_density) << ',' << format_double(r.occ_phi[0])
        << ',' << format_double(r.occ_phi[1]) << ',' << format_double(r.occ_phi[2]) << ','
        << format_double(r.energy_density) << ',' << format_double(r.ground_energy) << '\n';
}

}  // namespace qgbec
