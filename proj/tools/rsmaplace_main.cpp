#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rsmaplace/error.hpp"
#include "rsmaplace/harness.hpp"
#include "rsmaplace/scenario.hpp"
#include "rsmaplace/solver.hpp"

namespace {

enum class Verbosity { Quiet, Info, Debug };

Verbosity verbosity_from_env() {
  const char* v = std::getenv("RSMAPLACE_LOG");
  if (v == nullptr) return Verbosity::Info;
  const std::string s(v);
  if (s == "quiet" || s == "0") return Verbosity::Quiet;
  if (s == "debug" || s == "2") return Verbosity::Debug;
  return Verbosity::Info;
}

const Verbosity kVerbosity = verbosity_from_env();

void info(const std::string& msg) {
  if (kVerbosity != Verbosity::Quiet) std::cerr << msg << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using namespace rsmaplace;
  CLI::App app{"Multi-UAV placement with RSMA max-min rate optimization"};
  app.require_subcommand(1);

  std::string specName = "default";
  std::uint64_t genSeed = 1;
  std::string genOut;
  std::size_t genUsers = 0;
  auto* gen = app.add_subcommand("gen", "Generate a scenario file");
  gen->add_option("--spec", specName, "'default' or a generator spec JSON file");
  gen->add_option("--seed", genSeed, "Generator seed");
  gen->add_option("--out", genOut, "Output scenario path")->required();
  gen->add_option("--users", genUsers, "Override the user count");

  std::string scenarioPath;
  std::string schemeName = "rsma";
  std::uint64_t runSeed = 1;
  int tMax = 0;
  std::string runOut;
  bool recordTiming = false;
  auto* run = app.add_subcommand("run", "Optimize one scenario with one scheme");
  run->add_option("--scenario", scenarioPath, "Scenario JSON file")->required();
  run->add_option("--scheme", schemeName, "rsma, noma, fixed-position, fixed-power or no-geometry");
  run->add_option("--seed", runSeed, "Initialization seed");
  run->add_option("--tmax", tMax, "Override the iteration count");
  run->add_option("--out", runOut, "Output directory for trace.csv and result.json")->required();
  run->add_flag("--record-timing", recordTiming, "Fill wall_ms (makes output nondeterministic)");

  std::string cmpScenario;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string cmpOut;
  unsigned threads = 0;
  auto* cmp = app.add_subcommand("compare", "Run every scheme over several seeds");
  cmp->add_option("--scenario", cmpScenario, "Scenario JSON file")->required();
  cmp->add_option("--seeds", seeds, "Initialization seeds")->delimiter(',');
  cmp->add_option("--out", cmpOut, "Output directory")->required();
  cmp->add_option("--threads", threads, "Concurrent runs (0 = hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      GenSpec spec = specName == "default" ? GenSpec::default_spec() : load_gen_spec(specName);
      if (genUsers > 0) {
        spec.userCount = genUsers;
        spec.name += "-" + std::to_string(genUsers) + "-users";
      }
      const Scenario s = generate_scenario(spec, genSeed);
      save_scenario(s, genOut);
      info("wrote " + genOut + " (" + std::to_string(s.buildings.size()) + " buildings, " +
           std::to_string(s.users.size()) + " users)");
    } else if (*run) {
      RunOverrides overrides;
      if (tMax > 0) overrides.tMax = tMax;
      overrides.recordTiming = recordTiming;
      const RunResult r = run_experiment(scenarioPath, parse_scheme(schemeName), runSeed, runOut, overrides);
      if (kVerbosity == Verbosity::Debug) {
        for (const auto& row : r.trace) {
          info("iter " + std::to_string(row.iter) + " min_rate " + format_double(row.minRate) + " zeta " +
               format_double(row.zeta));
        }
      }
      info(std::string(to_string(r.scheme)) + ": min rate " + format_double(r.initialMinRate) + " -> " +
           format_double(r.rates.minRate) + " bit/s/Hz");
    } else if (*cmp) {
      const Scenario s = load_scenario(cmpScenario);
      const ComparisonReport report = compare_baselines(s, seeds, cmpOut, threads);
      int failed = 0;
      for (const auto& c : report.cells) {
        if (!c.ok) {
          ++failed;
          info("seed " + std::to_string(c.seed) + " " + std::string(to_string(c.scheme)) + " failed: " + c.error);
        }
      }
      if (kVerbosity != Verbosity::Quiet) std::cerr << report.to_csv();
      if (failed > 0) return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
