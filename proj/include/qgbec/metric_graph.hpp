#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qgbec {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double length = 1.0;
};

/// One end of an edge: side 0 is the x = 0 end (the `from` vertex), side 1 is x = l_e.
struct EdgeEnd {
  std::size_t edge = 0;
  int side = 0;
};

/// Compact metric graph: finitely many vertices and edges of finite positive length.
///
/// Ends incident to a vertex are ordered by edge index, the x = 0 end of a loop
/// before its x = l_e end. That order fixes the basis of the per-vertex boundary
/// value vectors used by VertexConditions.
class MetricGraph {
 public:
  MetricGraph() = default;
  MetricGraph(std::vector<std::string> vertex_ids, std::vector<Edge> edges);

  const std::vector<std::string>& vertex_ids() const { return vertex_ids_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t vertex_count() const { return vertex_ids_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  double total_length() const { return total_length_; }
  double min_length() const;
  double max_length() const;

  const std::vector<EdgeEnd>& ends_at(std::size_t vertex) const { return ends_[vertex]; }
  std::size_t degree(std::size_t vertex) const { return ends_[vertex].size(); }
  std::size_t vertex_index(const std::string& id) const;

 private:
  std::vector<std::string> vertex_ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeEnd>> ends_;
  double total_length_ = 0.0;
};

/// Local boundary condition at a vertex of degree d, acting on the boundary
/// values F and inward derivatives F' of the incident ends:
///   P F = 0,   (1 - P) F' + L (1 - P) F = 0.
struct VertexBlock {
  CMatrix P;
  CMatrix L;
};

struct VertexConditions {
  std::vector<VertexBlock> blocks;  // indexed by vertex
};

struct Shortcut {
  enum class Kind { neumann, dirichlet, robin, kirchhoff, delta };
  Kind kind = Kind::neumann;
  double parameter = 0.0;  // sigma for robin, alpha for delta
};

Shortcut::Kind parse_shortcut_kind(const std::string& name);

VertexBlock conditions_from_shortcut(const Shortcut& shortcut, std::size_t degree);

struct ConditionReport {
  double projection_defect = 0.0;    // max ||P^2 - P||
  double projection_asymmetry = 0.0; // max ||P - P^*||
  double l_asymmetry = 0.0;          // max ||L - L^*||
  double l_range_defect = 0.0;       // max(||P L||, ||L P||)
  bool dimensions_ok = true;
  double l_max = 0.0;                // largest eigenvalue over all L blocks
  std::size_t positive_count = 0;    // eigenvalues of the direct sum of L blocks above 1e-12

  double max_violation() const;
  bool ok(double threshold = 1e-12) const { return dimensions_ok && max_violation() <= threshold; }
};

ConditionReport validate_conditions(const MetricGraph& graph, const VertexConditions& conds);

struct QuantumGraph {
  MetricGraph graph;
  VertexConditions conditions;
};

/// Edge and vertex-condition data as read from a graph description.
struct GraphDescription {
  struct EdgeSpec {
    std::string from;
    std::string to;
    double length = 1.0;
  };
  struct ConditionSpec {
    bool is_shortcut = true;
    Shortcut shortcut;
    CMatrix P;
    CMatrix L;
  };
  std::vector<std::string> vertices;
  std::vector<EdgeSpec> edges;
  std::vector<std::pair<std::string, ConditionSpec>> conditions;
};

/// Validates and assembles a quantum graph. Throws Error(validation_failure) on
/// non-positive lengths, dangling endpoints, missing conditions, wrong block
/// dimensions, non-projection P or L not Hermitian on ker P.
QuantumGraph build_graph(const GraphDescription& description);

/// Every edge length multiplied by n; conditions are untouched.
MetricGraph scale(const MetricGraph& graph, unsigned n);

double spectral_norm(const CMatrix& m);

}  // namespace qgbec
