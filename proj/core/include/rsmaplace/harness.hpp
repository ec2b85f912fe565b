#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsmaplace/scenario.hpp"
#include "rsmaplace/solver.hpp"

namespace rsmaplace {

struct RunOverrides {
  std::optional<int> tMax;
  bool recordTiming{false};
};

struct RunResult {
  Scheme scheme{Scheme::Rsma};
  std::uint64_t seed{0};
  NetworkState initialState;
  NetworkState finalState;
  /// Recomputed from finalState with the true link model.
  RateBreakdown rates;
  double initialMinRate{0.0};
  double assumedMinRate{0.0};
  std::vector<IterationTrace> trace;
  SolverConfig config;
  double wallMs{0.0};
};

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

std::string trace_csv(const std::vector<IterationTrace>& trace);
std::string result_json(const RunResult& result);

/// Initializes with `seed`, runs the scheme and returns the outcome.
RunResult run_scheme(const Scenario& scenario, Scheme scheme, std::uint64_t seed, const RunOverrides& overrides = {});

/// run_scheme plus trace.csv and result.json under `outDir`.
RunResult run_experiment(const std::filesystem::path& scenarioPath, Scheme scheme, std::uint64_t seed,
                         const std::filesystem::path& outDir, const RunOverrides& overrides = {});

struct ComparisonCell {
  std::uint64_t seed{0};
  Scheme scheme{Scheme::Rsma};
  bool ok{false};
  double minRate{0.0};
  std::string error;
};

struct ComparisonReport {
  std::vector<ComparisonCell> cells;  // seed-major, schemes in all_schemes() order

  const ComparisonCell& cell(std::uint64_t seed, Scheme scheme) const;
  std::string to_csv() const;
};

/// Runs every scheme on every seed, `threads` runs at a time. With a
/// non-empty `outDir` each run writes into outDir/seed-<s>/<scheme>/ and the
/// table goes to outDir/comparison.csv. A failed run is recorded in its cell.
ComparisonReport compare_baselines(const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
                                   const std::filesystem::path& outDir, unsigned threads = 0,
                                   const RunOverrides& overrides = {});

}  // namespace rsmaplace
