#include "qgbec/graph_io.hpp"

#include <cmath>
#include <fstream>

#include "qgbec/error.hpp"

namespace qgbec {

namespace {

using nlohmann::json;

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::parse_failure, what); }

std::string id_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  parse_error("vertex ids must be strings or integers");
}

Complex parse_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  parse_error("matrix entries must be [re, im] pairs");
}

CMatrix parse_matrix(const json& j) {
  if (!j.is_array()) parse_error("matrix must be a list");
  if (j.empty()) parse_error("matrix must not be empty");
  const bool nested = j[0].is_array() && !j[0].empty() && j[0][0].is_array();
  if (nested) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    CMatrix m(rows, rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const json& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows)
        parse_error("matrix must be square");
      for (Eigen::Index c = 0; c < rows; ++c) m(r, c) = parse_complex(row[static_cast<std::size_t>(c)]);
    }
    return m;
  }
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(j.size()))));
  if (d * d != static_cast<Eigen::Index>(j.size())) parse_error("flat matrix length is not a square");
  CMatrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = parse_complex(j[static_cast<std::size_t>(r * d + c)]);
  return m;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) parse_error("unknown key '" + key + "' in " + where);
  }
}

GraphDescription::ConditionSpec parse_condition(const json& j) {
  if (!j.is_object()) parse_error("condition must be an object");
  GraphDescription::ConditionSpec spec;
  if (j.contains("kind")) {
    reject_unknown_keys(j, {"kind", "params"}, "condition");
    spec.is_shortcut = true;
    spec.shortcut.kind = [&] {
      try {
        return parse_shortcut_kind(j.at("kind").get<std::string>());
      } catch (const Error& e) {
        parse_error(e.what());
      }
    }();
    const json params = j.value("params", json::object());
    if (params.is_number()) {
      spec.shortcut.parameter = params.get<double>();
    } else if (params.is_object()) {
      reject_unknown_keys(params, {"sigma", "alpha"}, "condition params");
      if (spec.shortcut.kind == Shortcut::Kind::robin) {
        if (!params.contains("sigma")) parse_error("robin condition needs params.sigma");
        spec.shortcut.parameter = params.at("sigma").get<double>();
      } else if (spec.shortcut.kind == Shortcut::Kind::delta) {
        if (!params.contains("alpha")) parse_error("delta condition needs params.alpha");
        spec.shortcut.parameter = params.at("alpha").get<double>();
      }
    } else {
      parse_error("condition params must be an object or a number");
    }
    return spec;
  }
  reject_unknown_keys(j, {"P", "L"}, "condition");
  if (!j.contains("P") || !j.contains("L")) parse_error("condition needs either kind or both P and L");
  spec.is_shortcut = false;
  spec.P = parse_matrix(j.at("P"));
  spec.L = parse_matrix(j.at("L"));
  return spec;
}

}  // namespace

GraphDescription parse_graph_description(const json& doc) {
  if (!doc.is_object()) parse_error("graph description must be an object");
  reject_unknown_keys(doc, {"vertices", "edges", "conditions"}, "graph description");
  for (const char* key : {"vertices", "edges", "conditions"})
    if (!doc.contains(key)) parse_error(std::string("graph description lacks '") + key + "'");

  GraphDescription desc;
  try {
    for (const auto& v : doc.at("vertices")) desc.vertices.push_back(id_string(v));
    for (const auto& e : doc.at("edges")) {
      if (!e.is_object()) parse_error("edge must be an object");
      reject_unknown_keys(e, {"from", "to", "length"}, "edge");
      desc.edges.push_back({id_string(e.at("from")), id_string(e.at("to")), e.at("length").get<double>()});
    }
    if (!doc.at("conditions").is_object()) parse_error("conditions must be an object keyed by vertex id");
    for (const auto& [id, c] : doc.at("conditions").items()) desc.conditions.emplace_back(id, parse_condition(c));
  } catch (const json::exception& e) {
    parse_error(std::string("malformed graph description: ") + e.what());
  }
  return desc;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) parse_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    parse_error("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

QuantumGraph load_graph(const std::filesystem::path& path) {
  return build_graph(parse_graph_description(load_json(path)));
}

}  // namespace qgbec
