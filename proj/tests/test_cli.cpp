#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(QGBEC_CLI) + " " + args + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("qgbec-cli-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const std::string graphs = std::string(QGBEC_CONFIGS) + "/graphs";

}  // namespace

TEST_CASE("spectrum of the Neumann interval") {
  const fs::path d = scratch("spectrum");
  write(d / "c.json", R"({"mode": "spectrum", "graph": ")" + graphs + R"(/neumann_interval.json",
                          "output": "out.csv", "e_max": 50})");
  const Outcome o = run_cli("--config " + (d / "c.json").string(), d);
  REQUIRE(o.status == 0);
  const std::string csv = slurp(d / "out.csv");
  CHECK(csv.rfind("index,E,multiplicity\n0,0.0,1\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  fs::remove_all(d);
}

TEST_CASE("rerun is byte-identical and hits the cache") {
  const fs::path d = scratch("rerun");
  write(d / "c.json", R"({"mode": "sweep", "graph": ")" + graphs + R"(/robin_interval.json",
                          "output": "out.csv", "beta": 1.0, "rho": 1.0, "n_list": [2, 4, 8]})");
  const Outcome first = run_cli("--config " + (d / "c.json").string() + " --cache-dir " + (d / "cache").string(), d);
  REQUIRE(first.status == 0);
  CHECK(first.err.find("cache store:") != std::string::npos);
  const std::string a = slurp(d / "out.csv");
  const Outcome second = run_cli("--config " + (d / "c.json").string() + " --cache-dir " + (d / "cache").string(), d);
  REQUIRE(second.status == 0);
  CHECK(second.err.find("cache hit:") != std::string::npos);
  CHECK(slurp(d / "out.csv") == a);

  const Outcome cold = run_cli("--config " + (d / "c.json").string() + " --no-cache --out " + (d / "cold.csv").string(), d);
  REQUIRE(cold.status == 0);
  CHECK(cold.err.find("cache") == std::string::npos);
  CHECK(slurp(d / "cold.csv") == a);
  fs::remove_all(d);
}

TEST_CASE("unknown key is a parse failure naming the key") {
  const fs::path d = scratch("unknown");
  write(d / "c.json", R"({"mode": "spectrum", "graph": ")" + graphs + R"(/neumann_interval.json",
                          "output": "out.csv", "e_max": 50, "temprature": 3})");
  const Outcome o = run_cli("--config " + (d / "c.json").string(), d);
  CHECK(o.status == 2);
  CHECK(o.err.rfind("error: PARSE_FAILURE:", 0) == 0);
  CHECK(o.err.find("temprature") != std::string::npos);
  CHECK(std::count(o.err.begin(), o.err.end(), '\n') == 1);
  fs::remove_all(d);
}

TEST_CASE("error exit codes") {
  const fs::path d = scratch("codes");
  SUBCASE("validation") {
    write(d / "g.json", R"({"vertices": ["a", "b"], "edges": [{"from": "a", "to": "b", "length": -1}],
                            "conditions": {"a": {"kind": "neumann"}, "b": {"kind": "neumann"}}})");
    write(d / "c.json", R"({"mode": "spectrum", "graph": "g.json", "output": "out.csv", "e_max": 5})");
    const Outcome o = run_cli("--config " + (d / "c.json").string(), d);
    CHECK(o.status == 3);
    CHECK(o.err.find("VALIDATION_FAILURE") != std::string::npos);
  }
  SUBCASE("degenerate ground state") {
    write(d / "g.json", R"({"vertices": ["a", "b"], "edges": [{"from": "a", "to": "b", "length": 10}],
                            "conditions": {"a": {"kind": "robin", "params": {"sigma": 1}},
                                           "b": {"kind": "robin", "params": {"sigma": 1}}}})");
    write(d / "c.json", R"({"mode": "sweep", "graph": "g.json", "output": "out.csv", "beta": 1, "rho": 1, "n_list": [4]})");
    CHECK(run_cli("--config " + (d / "c.json").string() + " --no-cache", d).status == 4);
  }
  SUBCASE("dimension cap") {
    write(d / "c.json", R"({"mode": "interacting", "graph": ")" + graphs + R"(/robin_interval.json",
                            "output": "out.csv", "beta": 1, "N": 3, "alpha": 1, "basis_size": 40, "n_list": [2]})");
    CHECK(run_cli("--config " + (d / "c.json").string() + " --no-cache", d).status == 5);
  }
  SUBCASE("missing config and bad flags") {
    CHECK(run_cli("--config " + (d / "absent.json").string(), d).status == 2);
    CHECK(run_cli("--threads 0 --config x.json", d).status == 2);
  }
  fs::remove_all(d);
}
