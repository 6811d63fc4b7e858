#include "qgbec/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <unistd.h>

#include "qgbec/csv.hpp"
#include "qgbec/error.hpp"
#include "qgbec/graph_io.hpp"
#include "qgbec/ideal_bose.hpp"

namespace qgbec {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::parse_failure, what); }

double number(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_number()) parse_error(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

unsigned positive_integer(const json& v, const std::string& what) {
  if (!v.is_number_integer() || v.get<long long>() < 1) parse_error(what + " must be a positive integer");
  return unsigned(v.get<long long>());
}

void require(const json& doc, std::initializer_list<const char*> keys, const std::string& mode) {
  for (const char* k : keys)
    if (!doc.contains(k)) parse_error("missing required key '" + std::string(k) + "' for mode " + mode);
}

void write_atomically(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::validation_failure, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(ErrorCode::validation_failure, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void canonical_into(const json& doc, std::string& out) {
  switch (doc.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, v] : doc.items()) {  // nlohmann objects iterate in key order
        if (!first) out += ',';
        first = false;
        out += json(k).dump();
        out += ':';
        canonical_into(v, out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < doc.size(); ++i) {
        if (i) out += ',';
        canonical_into(doc[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", doc.get<double>());
      out += buf;
      break;
    }
    default:
      out += doc.dump();
  }
}

json spectrum_to_json(const Spectrum& s) {
  json levels = json::array();
  for (const Level& l : s.levels) levels.push_back({l.energy, l.multiplicity});
  return {{"levels", levels}, {"range_min", s.range_min}, {"range_max", s.range_max}, {"tolerance", s.tolerance}};
}

Spectrum spectrum_from_json(const json& j) {
  Spectrum s;
  for (const auto& l : j.at("levels")) s.levels.push_back({l.at(0).get<double>(), l.at(1).get<int>()});
  s.range_min = j.at("range_min").get<double>();
  s.range_max = j.at("range_max").get<double>();
  s.tolerance = j.at("tolerance").get<double>();
  return s;
}

ScanOptions scan_options(const ExperimentConfig& c) {
  ScanOptions o;
  o.tolerance = c.tolerance;
  o.multiplicity_threshold = c.multiplicity_threshold;
  return o;
}

}  // namespace

std::string canonical_json(const json& doc) {
  std::string out;
  canonical_into(doc, out);
  return out;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ExperimentConfig parse_experiment_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) parse_error("config must be an object");
  static const char* allowed[] = {"mode",  "graph",  "output",     "ground_state_output", "cache_dir", "n",
                                  "e_max", "beta",   "rho",        "N",                   "alpha",     "n_list",
                                  "delta", "gamma",  "tolerance",  "multiplicity_threshold",
                                  "basis_size",      "potential",  "window",              "threads"};
  for (const auto& [key, value] : doc.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) parse_error("unknown key '" + key + "'");
  }
  ExperimentConfig c;
  require(doc, {"mode", "graph", "output"}, "any");
  const std::string mode = doc.at("mode").is_string() ? doc.at("mode").get<std::string>() : "";
  if (mode == "spectrum") c.mode = Mode::spectrum;
  else if (mode == "sweep") c.mode = Mode::sweep;
  else if (mode == "interacting") c.mode = Mode::interacting;
  else parse_error("mode must be spectrum, sweep or interacting");

  auto path_of = [&](const char* key) {
    if (!doc.at(key).is_string()) parse_error(std::string("'") + key + "' must be a path string");
    fs::path p = doc.at(key).get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  c.graph = path_of("graph");
  c.output = path_of("output");
  if (doc.contains("ground_state_output")) c.ground_state_output = path_of("ground_state_output");
  c.cache_dir = doc.contains("cache_dir") ? path_of("cache_dir") : base_dir / ".qgbec-cache";

  if (doc.contains("n")) c.n = positive_integer(doc.at("n"), "'n'");
  if (doc.contains("e_max")) c.e_max = number(doc, "e_max");
  if (doc.contains("beta")) c.beta = number(doc, "beta");
  if (doc.contains("rho")) c.rho = number(doc, "rho");
  if (doc.contains("N")) {
    if (!doc.at("N").is_number_integer()) parse_error("'N' must be an integer");
    c.particles = doc.at("N").get<int>();
  }
  if (doc.contains("alpha")) c.alpha = number(doc, "alpha");
  if (doc.contains("n_list")) {
    if (!doc.at("n_list").is_array()) parse_error("'n_list' must be a list");
    for (const auto& v : doc.at("n_list")) c.n_list.push_back(positive_integer(v, "n_list entry"));
    for (std::size_t i = 1; i < c.n_list.size(); ++i)
      if (c.n_list[i] <= c.n_list[i - 1]) parse_error("'n_list' must be strictly ascending");
  }
  if (doc.contains("delta")) c.delta = number(doc, "delta");
  if (doc.contains("gamma")) c.gamma = number(doc, "gamma");
  if (doc.contains("tolerance")) c.tolerance = number(doc, "tolerance");
  if (doc.contains("multiplicity_threshold")) c.multiplicity_threshold = number(doc, "multiplicity_threshold");
  if (doc.contains("basis_size")) c.basis_size = positive_integer(doc.at("basis_size"), "'basis_size'");
  if (doc.contains("threads")) c.threads = positive_integer(doc.at("threads"), "'threads'");
  if (doc.contains("potential")) {
    if (!doc.at("potential").is_string()) parse_error("'potential' must be a string");
    c.potential = parse_potential_family(doc.at("potential").get<std::string>());
  }
  if (doc.contains("window")) {
    const json& w = doc.at("window");
    if (!w.is_object()) parse_error("'window' must be an object");
    for (const auto& [key, value] : w.items())
      if (key != "epsilon" && key != "A") parse_error("unknown key '" + key + "' in window");
    require(w, {"epsilon", "A"}, "window");
    c.window_epsilon = number(w, "epsilon");
    c.window_half_width = number(w, "A");
  }

  switch (c.mode) {
    case Mode::spectrum:
      require(doc, {"e_max"}, mode);
      break;
    case Mode::sweep:
      require(doc, {"beta", "rho", "n_list"}, mode);
      break;
    case Mode::interacting:
      require(doc, {"beta", "N", "n_list"}, mode);
      if (c.potential == PotentialFamily::windowed_constant) require(doc, {"window"}, mode);
      else require(doc, {"alpha"}, mode);
      break;
  }
  if (c.mode != Mode::spectrum && c.n_list.empty()) parse_error("'n_list' must not be empty");
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(load_json(path), path.parent_path());
}

SpectrumCache::SpectrumCache(fs::path dir, std::ostream* log) : dir_(std::move(dir)), log_(log) {}

std::optional<Spectrum> SpectrumCache::load(const std::string& key) const {
  const fs::path file = dir_ / ("spectrum-" + key + ".json");
  std::ifstream in(file);
  if (!in) return std::nullopt;
  try {
    Spectrum s = spectrum_from_json(json::parse(in));
    if (log_) *log_ << "cache hit: " << key << '\n';
    return s;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are recomputed and overwritten
  }
}

void SpectrumCache::store(const std::string& key, const Spectrum& spectrum) const {
  write_atomically(dir_ / ("spectrum-" + key + ".json"), spectrum_to_json(spectrum).dump() + "\n");
  if (log_) *log_ << "cache store: " << key << '\n';
}

RunReport run(const ExperimentConfig& config, std::ostream& log) {
  RunReport report;
  const json graph_doc = load_json(config.graph);
  const QuantumGraph qg = [&] {
    try {
      return build_graph(parse_graph_description(graph_doc));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::parse_failure, e.what());
    }
  }();
  const std::string graph_form = canonical_json(graph_doc);
  const ScanOptions scan = scan_options(config);

  std::optional<SpectrumCache> cache;
  if (config.use_cache && config.cache_dir) cache.emplace(*config.cache_dir, &log);
  std::mutex cache_mutex;

  // key = hash(graph canonical form, n, tolerances, range)
  auto cached_spectrum = [&](unsigned n, const json& range, const std::function<Spectrum()>& compute) {
    const json key_doc = {{"graph", graph_form},
                          {"n", n},
                          {"tolerance", config.tolerance},
                          {"multiplicity_threshold", config.multiplicity_threshold},
                          {"range", range}};
    const std::string key = hex(fnv1a64(canonical_json(key_doc)));
    if (cache) {
      std::lock_guard<std::mutex> lock(cache_mutex);
      if (auto hit = cache->load(key)) {
        cache->count(true);
        return *hit;
      }
    }
    Spectrum s = compute();
    if (cache) {
      std::lock_guard<std::mutex> lock(cache_mutex);
      cache->count(false);
      cache->store(key, s);
    }
    return s;
  };

  std::ostringstream csv;
  switch (config.mode) {
    case Mode::spectrum: {
      const MetricGraph g = scale(qg.graph, config.n);
      const Spectrum s = cached_spectrum(config.n, json{{"e_max", config.e_max}},
                                         [&] { return spectrum_up_to(g, qg.conditions, config.e_max, scan); });
      write_spectrum_csv(csv, s);
      if (config.ground_state_output) {
        std::ostringstream gcsv;
        const GroundState gs = ground_state(g, qg.conditions, scan);
        if (gs.degenerate) log << "warning: degenerate ground level, coefficients of one eigenvector reported\n";
        write_ground_state_csv(gcsv, gs);
        write_atomically(*config.ground_state_output, gcsv.str());
        report.outputs.push_back(*config.ground_state_output);
      }
      break;
    }
    case Mode::sweep: {
      SweepOptions opts;
      opts.threads = config.threads;
      opts.scan = scan;
      opts.spectrum = [&](unsigned n, const MetricGraph& g, double beta) {
        return cached_spectrum(n, json{{"thermal_beta", beta}},
                               [&] { return thermal_spectrum(g, qg.conditions, beta, scan); });
      };
      write_sweep_csv(csv, condensate_sweep(qg.graph, qg.conditions, config.rho, config.beta, config.n_list, opts));
      break;
    }
    case Mode::interacting: {
      InteractingSweepConfig ic;
      ic.particles = config.particles;
      ic.beta = config.beta;
      ic.basis_size = config.basis_size;
      ic.family = config.potential;
      ic.params.alpha = config.alpha;
      ic.params.epsilon = config.window_epsilon;
      ic.params.half_width = config.window_half_width;
      ic.params.delta = config.delta;
      ic.params.gamma = config.gamma;
      ic.n_list = config.n_list;
      ic.threads = config.threads;
      ic.scan = scan;
      write_interacting_csv(csv, interacting_sweep(qg.graph, qg.conditions, ic));
      break;
    }
  }
  write_atomically(config.output, csv.str());
  report.outputs.insert(report.outputs.begin(), config.output);
  if (cache) {
    report.cache_hits = cache->hits();
    report.cache_misses = cache->misses();
  }
  return report;
}

}  // namespace qgbec
