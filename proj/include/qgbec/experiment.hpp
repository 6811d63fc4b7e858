#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qgbec/interacting.hpp"

namespace qgbec {

enum class Mode { spectrum, sweep, interacting };

struct ExperimentConfig {
  Mode mode = Mode::spectrum;
  std::filesystem::path graph;
  std::filesystem::path output;
  std::optional<std::filesystem::path> ground_state_output;  // spectrum mode only
  std::optional<std::filesystem::path> cache_dir;  // defaults to .qgbec-cache next to the config

  unsigned n = 1;  // spectrum mode: scale factor
  double e_max = 0.0;
  double beta = 1.0;
  double rho = 1.0;
  int particles = 2;
  double alpha = 0.0;
  std::vector<unsigned> n_list;
  double delta = 0.3;
  double gamma = 0.05;
  double tolerance = 1e-13;
  double multiplicity_threshold = 1e-8;
  std::size_t basis_size = 20;
  PotentialFamily potential = PotentialFamily::delta;
  double window_epsilon = 0.0;
  double window_half_width = 0.0;
  unsigned threads = 1;
  bool use_cache = true;
};

/// Relative paths are resolved against `base_dir`. Unknown keys and missing
/// mode-specific fields raise Error(parse_failure).
ExperimentConfig parse_experiment_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Sorted keys, every number printed as %.17g of its double value.
std::string canonical_json(const nlohmann::json& doc);
std::uint64_t fnv1a64(const std::string& data);

/// Spectrum store keyed by a hash of the canonical inputs. Writes go to a
/// temporary file in the same directory and are renamed into place.
class SpectrumCache {
 public:
  SpectrumCache(std::filesystem::path dir, std::ostream* log);

  std::optional<Spectrum> load(const std::string& key) const;
  void store(const std::string& key, const Spectrum& spectrum) const;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  void count(bool hit) const { (hit ? hits_ : misses_)++; }

 private:
  std::filesystem::path dir_;
  std::ostream* log_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
};

struct RunReport {
  std::vector<std::filesystem::path> outputs;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
};

/// Executes one experiment and writes its CSV files. Cache events go to `log`.
RunReport run(const ExperimentConfig& config, std::ostream& log);

}  // namespace qgbec
