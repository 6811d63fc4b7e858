#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "qgbec/error.hpp"
#include "qgbec/interacting.hpp"

namespace qgbec {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Ghost-cell ratio u_ghost = g u_boundary for a 1x1 vertex block.
double ghost_ratio(const VertexBlock& block, double h) {
  if (block.P.rows() != 1 || block.L.rows() != 1) throw Error(ErrorCode::validation_failure, "interval end must have degree 1");
  if (std::abs(block.P(0, 0)) > 0.5) return -1.0;  // Dirichlet
  const double sigma = block.L(0, 0).real();
  const double t = 0.5 * sigma * h;
  if (!(std::abs(t) < 1.0)) throw Error(ErrorCode::validation_failure, "grid too coarse for the Robin parameter");
  return (1.0 + t) / (1.0 - t);
}

struct Levels {
  std::vector<double> values;
};

// Symmetric-sector two-particle operator on an n x n cell-centred grid.
SpMat symmetric_hamiltonian(int n, double h, double g_left, double g_right, double alpha) {
  std::vector<double> diag(std::size_t(n), 2.0 / (h * h));
  diag.front() -= g_left / (h * h);
  diag.back() -= g_right / (h * h);
  const double off = -1.0 / (h * h);

  // Index of the symmetric pair (i <= j).
  auto index = [n](int i, int j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
  };
  const int dim = n * (n + 1) / 2;
  std::vector<Triplet> t;
  t.reserve(std::size_t(dim) * 5);
  // Basis: e_ii, and (e_ij + e_ji)/sqrt(2) for i < j. Off-diagonal couplings into
  // or out of a diagonal cell pick up a factor sqrt(2).
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int a = index(i, j);
      double d = diag[std::size_t(i)] + diag[std::size_t(j)];
      if (i == j) d += alpha / h;
      t.emplace_back(a, a, d);
      auto couple = [&](int p, int q) {
        if (p < 0 || q < 0 || p >= n || q >= n) return;
        const int b = index(p, q);
        if (b == a) return;
        const bool a_diag = i == j, b_diag = p == q;
        double v = off;
        if (a_diag != b_diag) v *= std::sqrt(2.0);
        // A diagonal cell couples to (i, i +- 1) through both particle coordinates.
        t.emplace_back(b, a, v);
      };
      if (i == j) {
        couple(i - 1, j);
        couple(i, j + 1);
      } else {
        couple(i - 1, j);
        couple(i + 1, j);
        couple(i, j - 1);
        couple(i, j + 1);
      }
    }
  SpMat h2(dim, dim);
  h2.setFromTriplets(t.begin(), t.end());
  return h2;
}

std::vector<double> lowest_eigenvalues(const SpMat& a, double shift, int count) {
  const Eigen::Index dim = a.rows();
  SpMat shifted = a;
  for (Eigen::Index i = 0; i < dim; ++i) shifted.coeffRef(i, i) -= shift;
  Eigen::SimplicialLDLT<SpMat> solver(shifted);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::numerical_failure, "finite-difference factorisation failed");

  const int block = count + 3;
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(dim, block);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);

  Eigen::VectorXd ritz = Eigen::VectorXd::Zero(block), previous;
  for (int iter = 0; iter < 5000; ++iter) {
    Eigen::MatrixXd y = solver.solve(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    y = qr.householderQ() * Eigen::MatrixXd::Identity(dim, block);
    const Eigen::MatrixXd small = y.transpose() * (a * y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (small + small.transpose()));
    x = y * eig.eigenvectors();
    previous = ritz;
    ritz = eig.eigenvalues();
    if (iter > 2) {
      double change = 0.0;
      for (int k = 0; k < count; ++k)
        change = std::max(change, std::abs(ritz(k) - previous(k)) / std::max(1.0, std::abs(ritz(k))));
      if (change < 1e-14) break;
    }
  }
  return {ritz.data(), ritz.data() + count};
}

}  // namespace

FdResult fd_oracle_two_boson(double length, const VertexBlock& left, const VertexBlock& right, double alpha, double h,
                             int count) {
  if (!(length > 0.0)) throw Error(ErrorCode::validation_failure, "non-positive length");
  if (!(h > 0.0) || h > length / 200.0) throw Error(ErrorCode::validation_failure, "grid too coarse: need h <= l/200");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::validation_failure, "alpha must be nonnegative");
  if (count < 1) throw Error(ErrorCode::validation_failure, "count must be positive");

  int n_fine = int(std::ceil(length / h - 1e-9));
  n_fine = (n_fine + 3) / 4 * 4;

  FdResult out;
  for (int level = 0; level < 3; ++level) {
    const int n = n_fine >> level;
    const double hh = length / double(n);
    const double gl = ghost_ratio(left, hh), gr = ghost_ratio(right, hh);
    const SpMat a = symmetric_hamiltonian(n, hh, gl, gr, alpha);
    // With alpha >= 0 the spectrum is bounded below by twice the one-particle minimum.
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      t(i, i) = 2.0 / (hh * hh);
      if (i > 0) t(i, i - 1) = t(i - 1, i) = -1.0 / (hh * hh);
    }
    t(0, 0) -= gl / (hh * hh);
    t(n - 1, n - 1) -= gr / (hh * hh);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> one(t, Eigen::EigenvaluesOnly);
    const double shift = 2.0 * one.eigenvalues()(0) - 1.0;
    out.raw[std::size_t(level)] = lowest_eigenvalues(a, shift, count);
  }

  for (int k = 0; k < count; ++k) {
    const double e1 = out.raw[0][std::size_t(k)], e2 = out.raw[1][std::size_t(k)], e4 = out.raw[2][std::size_t(k)];
    double p = 2.0;
    const double ratio = (e4 - e2) / (e2 - e1);
    if (std::isfinite(ratio) && ratio > 1.0) p = std::log2(ratio);
    const double extrap = e1 + (e1 - e2) / (std::pow(2.0, p) - 1.0);
    const double nominal = std::clamp(std::round(p), 1.0, 4.0);
    const double alt = e1 + (e1 - e2) / (std::pow(2.0, nominal) - 1.0);
    if (std::abs(extrap - alt) > 1e-3 * std::max(std::abs(extrap), 1e-8))
      throw Error(ErrorCode::oracle_disagreement, "finite-difference extrapolation disagreement above 1e-3");
    if (k == 0) out.order = p;
    out.eigenvalues.push_back(extrap);
  }
  return out;
}

}  // namespace qgbec
