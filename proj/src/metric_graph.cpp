#include "qgbec/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qgbec/error.hpp"

namespace qgbec {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::validation_failure, what);
}

}  // namespace

MetricGraph::MetricGraph(std::vector<std::string> vertex_ids, std::vector<Edge> edges)
    : vertex_ids_(std::move(vertex_ids)), edges_(std::move(edges)), ends_(vertex_ids_.size()) {
  if (vertex_ids_.empty()) invalid("graph has no vertices");
  if (edges_.empty()) invalid("graph has no edges");
  for (std::size_t i = 0; i < vertex_ids_.size(); ++i)
    for (std::size_t j = i + 1; j < vertex_ids_.size(); ++j)
      if (vertex_ids_[i] == vertex_ids_[j]) invalid("duplicate vertex id '" + vertex_ids_[i] + "'");

  // Kahan summation keeps the total within 1e-14 relative for long edge lists.
  double sum = 0.0, carry = 0.0;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    if (!(edge.length > 0.0) || !std::isfinite(edge.length))
      invalid("non-positive length on edge " + std::to_string(e));
    if (edge.from >= vertex_ids_.size() || edge.to >= vertex_ids_.size())
      invalid("dangling endpoint on edge " + std::to_string(e));
    ends_[edge.from].push_back({e, 0});
    ends_[edge.to].push_back({e, 1});
    const double y = edge.length - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  total_length_ = sum;
}

double MetricGraph::min_length() const {
  double m = edges_.front().length;
  for (const auto& e : edges_) m = std::min(m, e.length);
  return m;
}

double MetricGraph::max_length() const {
  double m = edges_.front().length;
  for (const auto& e : edges_) m = std::max(m, e.length);
  return m;
}

std::size_t MetricGraph::vertex_index(const std::string& id) const {
  auto it = std::find(vertex_ids_.begin(), vertex_ids_.end(), id);
  if (it == vertex_ids_.end()) invalid("dangling endpoint: unknown vertex '" + id + "'");
  return static_cast<std::size_t>(it - vertex_ids_.begin());
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

Shortcut::Kind parse_shortcut_kind(const std::string& name) {
  if (name == "neumann") return Shortcut::Kind::neumann;
  if (name == "dirichlet") return Shortcut::Kind::dirichlet;
  if (name == "robin") return Shortcut::Kind::robin;
  if (name == "kirchhoff") return Shortcut::Kind::kirchhoff;
  if (name == "delta") return Shortcut::Kind::delta;
  invalid("unknown condition kind '" + name + "'");
}

VertexBlock conditions_from_shortcut(const Shortcut& shortcut, std::size_t degree) {
  if (degree == 0) invalid("vertex condition requested for an isolated vertex");
  const auto d = static_cast<Eigen::Index>(degree);
  const CMatrix identity = CMatrix::Identity(d, d);
  const CMatrix zero = CMatrix::Zero(d, d);
  // Continuity vector u = (1,...,1)/sqrt(d).
  const CVector u = CVector::Constant(d, Complex(1.0 / std::sqrt(double(degree)), 0.0));
  const CMatrix uu = u * u.adjoint();

  switch (shortcut.kind) {
    case Shortcut::Kind::neumann:
      return {zero, zero};
    case Shortcut::Kind::dirichlet:
      return {identity, zero};
    case Shortcut::Kind::robin:
      if (degree != 1) invalid("robin condition needs a vertex of degree 1");
      return {zero, CMatrix::Constant(1, 1, Complex(shortcut.parameter, 0.0))};
    case Shortcut::Kind::kirchhoff:
      return {identity - uu, zero};
    case Shortcut::Kind::delta:
      return {identity - uu, (-shortcut.parameter / double(degree)) * uu};
  }
  invalid("unknown condition kind");
}

double ConditionReport::max_violation() const {
  return std::max({projection_defect, projection_asymmetry, l_asymmetry, l_range_defect});
}

ConditionReport validate_conditions(const MetricGraph& graph, const VertexConditions& conds) {
  ConditionReport report;
  if (conds.blocks.size() != graph.vertex_count()) {
    report.dimensions_ok = false;
    return report;
  }
  bool any_eigenvalue = false;
  for (std::size_t v = 0; v < graph.vertex_count(); ++v) {
    const VertexBlock& block = conds.blocks[v];
    const auto d = static_cast<Eigen::Index>(graph.degree(v));
    if (block.P.rows() != d || block.P.cols() != d || block.L.rows() != d || block.L.cols() != d) {
      report.dimensions_ok = false;
      continue;
    }
    report.projection_defect = std::max(report.projection_defect, spectral_norm(block.P * block.P - block.P));
    report.projection_asymmetry = std::max(report.projection_asymmetry, spectral_norm(block.P - block.P.adjoint()));
    report.l_asymmetry = std::max(report.l_asymmetry, spectral_norm(block.L - block.L.adjoint()));
    report.l_range_defect = std::max(
        {report.l_range_defect, spectral_norm(block.P * block.L), spectral_norm(block.L * block.P)});

    const CMatrix herm = 0.5 * (block.L + block.L.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
      const double lambda = eig.eigenvalues()(i);
      report.l_max = any_eigenvalue ? std::max(report.l_max, lambda) : lambda;
      any_eigenvalue = true;
      if (lambda > 1e-12) ++report.positive_count;
    }
  }
  return report;
}

QuantumGraph build_graph(const GraphDescription& description) {
  std::vector<Edge> edges;
  edges.reserve(description.edges.size());
  // Resolve names before constructing so dangling endpoints are reported by name.
  auto index_of = [&](const std::string& id) {
    auto it = std::find(description.vertices.begin(), description.vertices.end(), id);
    if (it == description.vertices.end()) invalid("dangling endpoint: unknown vertex '" + id + "'");
    return static_cast<std::size_t>(it - description.vertices.begin());
  };
  for (const auto& e : description.edges) {
    if (!(e.length > 0.0)) invalid("non-positive length on edge " + e.from + "-" + e.to);
    edges.push_back({index_of(e.from), index_of(e.to), e.length});
  }
  QuantumGraph qg{MetricGraph(description.vertices, std::move(edges)), {}};
  const MetricGraph& g = qg.graph;

  std::vector<bool> seen(g.vertex_count(), false);
  qg.conditions.blocks.resize(g.vertex_count());
  for (const auto& [id, spec] : description.conditions) {
    const std::size_t v = index_of(id);
    if (seen[v]) invalid("duplicate conditions for vertex '" + id + "'");
    seen[v] = true;
    if (g.degree(v) == 0) invalid("vertex '" + id + "' has no incident edges");
    if (spec.is_shortcut) {
      qg.conditions.blocks[v] = conditions_from_shortcut(spec.shortcut, g.degree(v));
    } else {
      const auto d = static_cast<Eigen::Index>(g.degree(v));
      if (spec.P.rows() != d || spec.P.cols() != d || spec.L.rows() != d || spec.L.cols() != d)
        invalid("dimension mismatch with degree at vertex '" + id + "'");
      qg.conditions.blocks[v] = {spec.P, spec.L};
    }
  }
  for (std::size_t v = 0; v < g.vertex_count(); ++v)
    if (!seen[v]) invalid("missing conditions for vertex '" + g.vertex_ids()[v] + "'");

  const ConditionReport report = validate_conditions(g, qg.conditions);
  if (!report.dimensions_ok) invalid("dimension mismatch with degree");
  if (report.projection_defect > 1e-12 || report.projection_asymmetry > 1e-12)
    invalid("non-projection P");
  if (report.l_asymmetry > 1e-12) invalid("non-Hermitian L");
  if (report.l_range_defect > 1e-12) invalid("L not supported on ker P");
  return qg;
}

MetricGraph scale(const MetricGraph& graph, unsigned n) {
  if (n == 0) invalid("scale factor must be positive");
  std::vector<Edge> edges = graph.edges();
  for (auto& e : edges) e.length *= double(n);
  return MetricGraph(graph.vertex_ids(), std::move(edges));
}

}  // namespace qgbec
