#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qgbec/error.hpp"
#include "qgbec/experiment.hpp"

namespace {

int fail(qgbec::ErrorCode code, const std::string& message) {
  std::string flat = message;
  for (char& c : flat)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "error: " << qgbec::to_string(code) << ": " << flat << '\n';
  return static_cast<int>(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bose gases on compact metric graphs: spectra, condensate sweeps, interacting sweeps"};
  std::string config_path, out_path, cache_dir;
  unsigned threads = 0;
  bool no_cache = false;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_path, "override the output CSV path");
  app.add_option("--cache-dir", cache_dir, "spectrum cache directory");
  app.add_option("--threads", threads, "worker threads for sweep points")->check(CLI::PositiveNumber);
  app.add_flag("--no-cache", no_cache, "ignore and do not write the spectrum cache");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(qgbec::ErrorCode::parse_failure, e.what());
  }

  try {
    qgbec::ExperimentConfig config = qgbec::load_experiment_config(config_path);
    if (!out_path.empty()) config.output = out_path;
    if (!cache_dir.empty()) config.cache_dir = cache_dir;
    if (threads > 0) config.threads = threads;
    if (no_cache) config.use_cache = false;
    const qgbec::RunReport report = qgbec::run(config, std::cerr);
    for (const auto& p : report.outputs) std::cerr << "wrote " << p.string() << '\n';
    return 0;
  } catch (const qgbec::Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(qgbec::ErrorCode::numerical_failure, e.what());
  }
}
