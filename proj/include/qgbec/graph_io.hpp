#pragma once

#include <filesystem>

#include "json.hpp"
#include "qgbec/metric_graph.hpp"

namespace qgbec {

/// Reads `vertices`, `edges` and `conditions` from a graph document. Matrices are
/// row-major: either a list of rows of [re, im] pairs or a flat list of d*d pairs.
/// Throws Error(parse_failure) on structural problems.
GraphDescription parse_graph_description(const nlohmann::json& doc);

nlohmann::json load_json(const std::filesystem::path& path);

QuantumGraph load_graph(const std::filesystem::path& path);

}  // namespace qgbec
