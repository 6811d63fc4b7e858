#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qgbec/metric_graph.hpp"

namespace qgbec::testing {

inline GraphDescription::ConditionSpec shortcut(Shortcut::Kind kind, double parameter = 0.0) {
  GraphDescription::ConditionSpec c;
  c.shortcut = {kind, parameter};
  return c;
}

inline const auto neumann = [] { return shortcut(Shortcut::Kind::neumann); };
inline const auto dirichlet = [] { return shortcut(Shortcut::Kind::dirichlet); };
inline const auto kirchhoff = [] { return shortcut(Shortcut::Kind::kirchhoff); };
inline auto robin(double sigma) { return shortcut(Shortcut::Kind::robin, sigma); }
inline auto delta(double alpha) { return shortcut(Shortcut::Kind::delta, alpha); }

inline QuantumGraph interval(double length, GraphDescription::ConditionSpec left,
                             GraphDescription::ConditionSpec right) {
  GraphDescription d;
  d.vertices = {"a", "b"};
  d.edges = {{"a", "b", length}};
  d.conditions = {{"a", std::move(left)}, {"b", std::move(right)}};
  return build_graph(d);
}

inline QuantumGraph robin_interval(double length = 1.0, double sigma = 1.0) {
  return interval(length, robin(sigma), neumann());
}

/// Star with the centre first; every leaf gets Neumann.
inline QuantumGraph star(const std::vector<double>& lengths, GraphDescription::ConditionSpec centre) {
  GraphDescription d;
  d.vertices = {"c"};
  d.conditions = {{"c", std::move(centre)}};
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::string leaf = "v" + std::to_string(i);
    d.vertices.push_back(leaf);
    d.edges.push_back({"c", leaf, lengths[i]});
    d.conditions.push_back({leaf, neumann()});
  }
  return build_graph(d);
}

/// Loop of length `loop` at vertex v with a tail of length `tail` to a Neumann leaf.
inline QuantumGraph loop_with_tail(double loop = 2.0, double tail = 1.3,
                                   GraphDescription::ConditionSpec centre = kirchhoff()) {
  GraphDescription d;
  d.vertices = {"v", "w"};
  d.edges = {{"v", "v", loop}, {"v", "w", tail}};
  d.conditions = {{"v", std::move(centre)}, {"w", neumann()}};
  return build_graph(d);
}

}  // namespace qgbec::testing
