#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qgbec/error.hpp"
#include "qgbec/ideal_bose.hpp"
#include "qgbec/interacting.hpp"
#include "support.hpp"

using namespace qgbec;
using namespace qgbec::testing;

namespace {

constexpr double pi = std::numbers::pi;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::numerical_failure;
}

PotentialParams with_alpha(double alpha) {
  PotentialParams p;
  p.alpha = alpha;
  return p;
}

// Random tensor with the pair symmetries V_ijkl = V_jilk = conj(V_klij).
PairTensor random_tensor(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PairTensor raw{m, std::vector<Complex>(m * m * m * m)};
  for (auto& v : raw.values) v = Complex(u(rng), u(rng) - 0.5);
  PairTensor t{m, std::vector<Complex>(m * m * m * m)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l)
          t(i, j, k, l) = 0.25 * (raw(i, j, k, l) + raw(j, i, l, k) + std::conj(raw(k, l, i, j)) +
                                  std::conj(raw(l, k, j, i)));
  return t;
}

struct Setup {
  QuantumGraph graph;
  OneParticleBasis basis;
  PairTensor tensor;
};

Setup robin_setup(unsigned n, std::size_t m, double alpha) {
  Setup s{robin_interval(), {}, {}};
  s.graph.graph = scale(s.graph.graph, n);
  s.basis = lowest_eigenpairs(s.graph.graph, s.graph.conditions, m);
  const InteractionPotential u =
      make_potential(PotentialFamily::delta, with_alpha(alpha), s.graph.graph.total_length());
  s.tensor = two_body_tensor(s.graph.graph, s.basis.states, u);
  return s;
}

}  // namespace

TEST_CASE("potential families") {
  SUBCASE("smooth bump keeps its mass") {
    const InteractionPotential u = make_potential(PotentialFamily::smooth_scaled, with_alpha(1.0), 10.0);
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    CHECK(Q::integrate([&](double x) { return u(x); }, -0.1, 0.1, 15, 1e-13) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(u(0.2) == 0.0);
    CHECK(u.half_width == doctest::Approx(0.05));
    for (double x = -u.half_width; x <= u.half_width; x += u.half_width / 50) CHECK(u(x) >= u.floor * (1 - 1e-12));
    CHECK(u.admissible);
  }
  SUBCASE("windowed constant") {
    PotentialParams p;
    p.epsilon = 0.5;
    p.half_width = 0.1;
    const InteractionPotential u = make_potential(PotentialFamily::windowed_constant, p, 10.0);
    CHECK(u(0.0) == 0.5);
    CHECK(u(0.1) == 0.5);
    CHECK(u(-0.1) == 0.5);
    CHECK(u(0.1001) == 0.0);
    CHECK(u.alpha == doctest::Approx(0.1));
  }
  SUBCASE("invalid parameters") {
    PotentialParams p = with_alpha(1.0);
    p.gamma = 0.2;
    CHECK(code_of([&] { make_potential(PotentialFamily::smooth_scaled, p, 10.0); }) == ErrorCode::validation_failure);
    p = with_alpha(1.0);
    p.profile = [](double x) { return std::abs(x) < 0.5 ? 1.0 - 4 * x * x : -0.1; };
    CHECK(code_of([&] { make_potential(PotentialFamily::smooth_scaled, p, 10.0); }) == ErrorCode::validation_failure);
    CHECK(parse_potential_family("windowed_constant") == PotentialFamily::windowed_constant);
    CHECK(code_of([] { parse_potential_family("yukawa"); }) == ErrorCode::parse_failure);
  }
}

TEST_CASE("pair elements of the constant state") {
  const QuantumGraph g = interval(2.5, neumann(), neumann());
  const OneParticleBasis b = lowest_eigenpairs(g.graph, g.conditions, 1);
  SUBCASE("constant potential") {
    PotentialParams p;
    p.epsilon = 0.7;
    p.half_width = 2.5;
    const InteractionPotential u = make_potential(PotentialFamily::windowed_constant, p, 2.5);
    CHECK(std::abs(two_body_tensor(g.graph, b.states, u)(0, 0, 0, 0) - 0.7) <= 1e-10);
  }
  SUBCASE("delta") {
    const InteractionPotential u = make_potential(PotentialFamily::delta, with_alpha(1.3), 2.5);
    CHECK(std::abs(two_body_tensor(g.graph, b.states, u)(0, 0, 0, 0) - 1.3 / 2.5) <= 1e-13);
  }
}

TEST_CASE("delta tensor against a direct per-edge integral") {
  const QuantumGraph g = star({1.0, 1.6}, delta(-1.0));
  const OneParticleBasis b = lowest_eigenpairs(g.graph, g.conditions, 4);
  const PairTensor t = two_body_tensor(g.graph, b.states, make_potential(PotentialFamily::delta, with_alpha(2.0), 2.6));
  using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (auto [i, j, k, l] : {std::array<int, 4>{0, 0, 0, 0}, {0, 1, 2, 3}, {1, 1, 0, 2}, {3, 2, 3, 2}}) {
    Complex sum = 0.0;
    for (std::size_t e = 0; e < 2; ++e) {
      auto f = [&](double x, bool imag) {
        const Complex v = std::conj(evaluate(b.states[i].pieces[e].f, x) * evaluate(b.states[j].pieces[e].f, x)) *
                          evaluate(b.states[k].pieces[e].f, x) * evaluate(b.states[l].pieces[e].f, x);
        return imag ? v.imag() : v.real();
      };
      const double len = g.graph.edges()[e].length;
      sum += Complex(Q::integrate([&](double x) { return f(x, false); }, 0.0, len, 15, 1e-14),
                     Q::integrate([&](double x) { return f(x, true); }, 0.0, len, 15, 1e-14));
    }
    CHECK(std::abs(t(i, j, k, l) - 2.0 * sum) <= 1e-11);
  }
}

TEST_CASE("occupation basis") {
  CHECK(occupation_dimension(2, 2) == 3);
  CHECK(occupation_dimension(40, 2) == 820);
  CHECK(occupation_dimension(30, 3) == 4960);
  const std::vector<double> eps = {0.0, 0.4, 1.1};
  PairTensor zero{3, std::vector<Complex>(81, 0.0)};
  const ManyBodyProblem p = assemble_hamiltonian(2, eps, zero, 1.0);
  REQUIRE(p.hamiltonian.rows() == 6);
  for (Eigen::Index r = 0; r < 6; ++r) {
    const auto& s = p.states[std::size_t(r)];
    CHECK(std::abs(p.hamiltonian(r, r).real() - (eps[std::size_t(s[0])] + eps[std::size_t(s[1])])) <= 1e-15);
    for (Eigen::Index c = 0; c < 6; ++c)
      if (c != r) CHECK(p.hamiltonian(r, c) == Complex(0.0));
  }
  const PairTensor big{80, {}};  // rejected before the values are read
  CHECK(code_of([&] { assemble_hamiltonian(3, std::vector<double>(80, 0.0), big, 1.0); }) == ErrorCode::dimension_cap);
}

TEST_CASE("two-mode Hamiltonian against explicit second quantisation") {
  // Modes {0, 1}; basis |00>, |01>, |11>; with H = 1/2 sum V_ijkl a*_i a*_j a_l a_k.
  std::mt19937_64 rng(3);
  const PairTensor v = random_tensor(2, rng);
  const ManyBodyProblem p = assemble_hamiltonian(2, {0.0, 0.0}, v, 1.0);
  const double s2 = std::sqrt(2.0);
  CHECK(std::abs(p.hamiltonian(0, 0) - v(0, 0, 0, 0)) <= 1e-14);
  CHECK(std::abs(p.hamiltonian(2, 2) - v(1, 1, 1, 1)) <= 1e-14);
  CHECK(std::abs(p.hamiltonian(1, 1) - (v(0, 1, 0, 1) + v(0, 1, 1, 0))) <= 1e-14);
  CHECK(std::abs(p.hamiltonian(0, 1) - s2 * v(0, 0, 0, 1)) <= 1e-14);
  CHECK(std::abs(p.hamiltonian(0, 2) - v(0, 0, 1, 1)) <= 1e-14);
  CHECK(std::abs(p.hamiltonian(1, 2) - s2 * v(0, 1, 1, 1)) <= 1e-14);
}

TEST_CASE("Hermiticity for random tensors") {
  std::mt19937_64 rng(17);
  for (int particles : {2, 3}) {
    const PairTensor t = random_tensor(5, rng);
    const ManyBodyProblem p = assemble_hamiltonian(particles, {0.0, 0.3, 0.9, 1.4, 2.0}, t, 3.0);
    const double norm = p.hamiltonian.norm();
    CHECK((p.hamiltonian - p.hamiltonian.adjoint()).norm() <= 1e-10 * norm);
  }
}

TEST_CASE("Gibbs state") {
  std::mt19937_64 rng(23);
  SUBCASE("free gas matches the canonical ensemble") {
    const std::vector<double> eps = {-0.4, 0.6};
    const ManyBodyProblem p = assemble_hamiltonian(2, eps, PairTensor{2, std::vector<Complex>(16, 0.0)}, 2.0);
    const GibbsState g = gibbs_reduced_density(p, 1.0);
    const CanonicalEnsemble e = canonical_log_partition(eps, 2, 1.0);
    CHECK(std::abs(g.gamma(0, 0).real() - mean_occupation(e, 0)) <= 1e-10);
    CHECK(std::abs(g.gamma(1, 1).real() - mean_occupation(e, 1)) <= 1e-10);
    CHECK(std::abs(g.gamma(0, 1)) <= 1e-14);
    CHECK(observables(g, CVector::Unit(2, 0)).occupation == doctest::Approx(mean_occupation(e, 0)).epsilon(1e-12));
  }
  SUBCASE("zero-temperature limit") {
    const PairTensor t = random_tensor(4, rng);
    const ManyBodyProblem p = assemble_hamiltonian(2, {0.0, 0.5, 1.0, 1.7}, t, 1.0);
    const GibbsState g = gibbs_reduced_density(p, 200.0);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(p.hamiltonian);
    REQUIRE(eig.eigenvalues()(1) - eig.eigenvalues()(0) > 0.2);
    const CVector psi = eig.eigenvectors().col(0);
    std::vector<double> density(4, 0.0);
    for (std::size_t s = 0; s < p.states.size(); ++s)
      for (int mode : p.states[s]) density[std::size_t(mode)] += std::norm(psi(Eigen::Index(s)));
    for (std::size_t q = 0; q < 4; ++q) CHECK(std::abs(g.gamma(Eigen::Index(q), Eigen::Index(q)).real() - density[q]) <= 1e-8);
    CHECK(std::abs(g.gamma.trace().real() - 2.0) <= 1e-8);
    CHECK(g.ground_energy == doctest::Approx(eig.eigenvalues()(0)).epsilon(1e-12));
  }
  SUBCASE("trace, positivity and the occupation bound") {
    for (int particles : {2, 3}) {
      const PairTensor t = random_tensor(5, rng);
      const ManyBodyProblem p = assemble_hamiltonian(particles, {0.0, 0.2, 0.3, 1.0, 1.2}, t, 1.0);
      for (double beta : {0.1, 1.0, 10.0}) {
        const GibbsState g = gibbs_reduced_density(p, beta);
        CHECK(std::abs(g.gamma.trace().real() - particles) <= 1e-10 * particles);
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(g.gamma);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
        std::normal_distribution<double> nd;
        for (int trial = 0; trial < 100; ++trial) {
          CVector c(5);
          for (Eigen::Index i = 0; i < 5; ++i) c(i) = Complex(nd(rng), nd(rng));
          c /= c.norm() * (1.0 + std::uniform_real_distribution<double>(0.0, 3.0)(rng));
          const double occ = observables(g, c).occupation;
          CHECK(occ >= -1e-12);
          CHECK(occ <= particles * c.squaredNorm() + 1e-9);
        }
      }
    }
    CHECK(code_of([&] {
            gibbs_reduced_density(assemble_hamiltonian(2, {0.0, 1.0}, random_tensor(2, rng), 1.0), 0.0);
          }) == ErrorCode::validation_failure);
    CHECK_THROWS_AS(observables(gibbs_reduced_density(assemble_hamiltonian(2, {0.0, 1.0}, random_tensor(2, rng), 1.0), 1.0),
                                CVector::Zero(3)),
                    Error);
  }
}

TEST_CASE("repulsion raises the ground energy") {
  const Setup free = robin_setup(2, 10, 0.0);
  const Setup rep = robin_setup(2, 10, 1.0);
  const double e0 = gibbs_reduced_density(assemble_hamiltonian(2, free.basis.energies, free.tensor, 2.0), 1.0).ground_energy;
  const double e1 = gibbs_reduced_density(assemble_hamiltonian(2, rep.basis.energies, rep.tensor, 2.0), 1.0).ground_energy;
  CHECK(e1 > e0);
  CHECK(e0 == doctest::Approx(2.0 * free.basis.energies[0]).epsilon(1e-12));
}

TEST_CASE("non-interacting reduction on a shared truncation") {
  for (int particles : {2, 3}) {
    const Setup s = robin_setup(4, 8, 0.0);
    const ManyBodyProblem p = assemble_hamiltonian(particles, s.basis.energies, s.tensor, 4.0);
    const GibbsState g = gibbs_reduced_density(p, 1.0);
    const CanonicalEnsemble e = canonical_log_partition(s.basis.energies, particles, 1.0);
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(std::abs(g.gamma(Eigen::Index(j), Eigen::Index(j)).real() - mean_occupation(e, j)) <= 1e-9);
    const GroundState gs = ground_state(s.graph.graph, s.graph.conditions);
    CHECK(std::abs(observables(g, expand_in_basis(s.basis.states, gs.state)).occupation - mean_occupation(e, 0)) <= 1e-9);
    // Mean energy of the canonical ensemble: -d log Z / d beta by central difference on a fine step.
    const double h = 1e-5;
    auto log_z = [&](double b) {
      const CanonicalEnsemble c = canonical_log_partition(s.basis.energies, particles, b);
      return c.log_z.back() - particles * b * c.shift;
    };
    const double energy = -(log_z(1.0 + h) - log_z(1.0 - h)) / (2 * h);
    CHECK(std::abs(observables(g, CVector::Unit(8, 0)).energy_density - energy / 4.0) <= 1e-8);
  }
}

TEST_CASE("cutoff decomposition of the Robin ground state") {
  double previous = 1.0;
  for (unsigned n : {4u, 8u, 16u}) {
    const Setup s = robin_setup(n, 10, 1.0);
    const ManyBodyProblem p = assemble_hamiltonian(2, s.basis.energies, s.tensor, s.graph.graph.total_length());
    const GibbsState g = gibbs_reduced_density(p, 1.0);
    const GroundState gs = ground_state(s.graph.graph, s.graph.conditions);
    const CutoffOccupations c = cutoff_occupations(g, s.graph.graph, s.basis.states, gs.state, 0.3);
    CHECK(std::abs(c.norms[0] + c.norms[1] + c.norms[2] - 1.0) <= 1e-12);
    CHECK(c.norms[2] < previous);
    previous = c.norms[2];
    for (std::size_t i = 0; i < 3; ++i) CHECK(c.occupations[i] <= 2.0 * c.norms[i] + 1e-9);
    CHECK(c.cross_excess <= 1e-9);
  }
  const Setup s = robin_setup(2, 4, 1.0);
  const GibbsState g = gibbs_reduced_density(assemble_hamiltonian(2, s.basis.energies, s.tensor, 2.0), 1.0);
  const GroundState gs = ground_state(s.graph.graph, s.graph.conditions);
  CHECK(code_of([&] { cutoff_occupations(g, s.graph.graph, s.basis.states, gs.state, 0.3); }) ==
        ErrorCode::validation_failure);
}

TEST_CASE("interacting sweep") {
  const QuantumGraph g = robin_interval();
  InteractingSweepConfig cfg;
  cfg.basis_size = 10;
  cfg.n_list = {2, 4};
  cfg.params = with_alpha(1.0);
  const auto rows = interacting_sweep(g.graph, g.conditions, cfg);
  cfg.params.alpha = 0.0;
  const auto free = interacting_sweep(g.graph, g.conditions, cfg);
  REQUIRE(rows.size() == 2);
  CHECK(std::isnan(rows[0].occ_phi[0]));
  CHECK_FALSE(std::isnan(rows[1].occ_phi[0]));
  for (std::size_t i = 0; i < 2; ++i) CHECK(rows[i].occ0_density < free[i].occ0_density);
  CHECK(rows[1].occ0_density < rows[0].occ0_density);

  std::ostringstream csv;
  write_interacting_csv(csv, rows);
  CHECK(csv.str().rfind("n,L,N,alpha,beta,occ0_density,occ_phi1,occ_phi2,occ_phi3,energy_density,ground_energy\n2,2.0,2,1.0,1.0,",
                        0) == 0);
  CHECK(csv.str().find(",nan,nan,nan,") != std::string::npos);
}

TEST_CASE("finite-difference oracle") {
  const QuantumGraph n = interval(4.0, neumann(), neumann());
  const VertexBlock& end = n.conditions.blocks[0];
  SUBCASE("free bosons are separable") {
    const FdResult r = fd_oracle_two_boson(4.0, end, end, 0.0, 0.02, 4);
    const double c = std::pow(pi / 4.0, 2);
    const std::vector<double> expected = {0.0, c, 2 * c, 4 * c};
    REQUIRE(r.eigenvalues.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.eigenvalues[i] - expected[i]) <= 1e-6);
  }
  SUBCASE("ground energy grows with alpha below the hardcore value") {
    const double hardcore = std::pow(pi / 4.0, 2);
    double previous = 0.0;
    for (double alpha : {1.0, 10.0, 50.0}) {
      const double e = fd_oracle_two_boson(4.0, end, end, alpha, 0.02).eigenvalues[0];
      CHECK(e > previous);
      CHECK(e < hardcore);
      previous = e;
    }
  }
  SUBCASE("Robin end against the one-particle problem") {
    // With alpha = 0 the two-boson ground energy is twice the one-particle one.
    const QuantumGraph r = robin_interval(4.0);
    const FdResult fd = fd_oracle_two_boson(4.0, r.conditions.blocks[0], r.conditions.blocks[1], 0.0, 0.02);
    const double e1 = ground_state(r.graph, r.conditions).energy;
    CHECK(std::abs(fd.eigenvalues[0] - 2 * e1) <= 1e-6);
  }
  SUBCASE("grid checks") {
    CHECK(code_of([&] { fd_oracle_two_boson(4.0, end, end, 1.0, 0.1); }) == ErrorCode::validation_failure);
  }
}
