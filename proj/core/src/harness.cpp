#include "rsmaplace/harness.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rsmaplace/error.hpp"

namespace rsmaplace {

namespace {

using Json = nlohmann::ordered_json;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string trace_csv(const std::vector<IterationTrace>& trace) {
  std::string out = "iter,min_rate,surrogate_obj,penalty,max_gap,zeta,los_violations,wall_ms\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iter) + ',' + format_double(r.minRate) + ',' + format_double(r.surrogateObjective) +
           ',' + format_double(r.penaltyValue) + ',' + format_double(r.maxIntegralityGap) + ',' +
           format_double(r.zeta) + ',' + std::to_string(r.losViolations) + ',' + format_double(r.wallMs) + '\n';
  }
  return out;
}

std::string result_json(const RunResult& r) {
  Json positions = Json::array();
  for (const auto& p : r.finalState.positions) positions.push_back(Json::array({p.x, p.y, p.z}));
  Json association = Json::array();
  for (Eigen::Index k = 0; k < r.finalState.assoc.values.rows(); ++k) {
    Json row = Json::array();
    for (Eigen::Index m = 0; m < r.finalState.assoc.values.cols(); ++m) {
      row.push_back(static_cast<int>(r.finalState.assoc.values(k, m)));
    }
    association.push_back(row);
  }
  const Json doc{{"scheme", std::string(to_string(r.scheme))},
                 {"seed", r.seed},
                 {"minRate", r.rates.minRate},
                 {"initialMinRate", r.initialMinRate},
                 {"assumedMinRate", r.assumedMinRate},
                 {"positions", positions},
                 {"power", Json{{"common", vector_json(r.finalState.power.common)},
                                {"private", matrix_json(r.finalState.power.privatePower)}}},
                 {"association", association},
                 {"rates", Json{{"common", vector_json(r.rates.perUserCommon)},
                                {"private", vector_json(r.rates.perUserPrivate)},
                                {"total", vector_json(r.rates.perUserTotal)}}},
                 {"config", Json{{"zeta0", r.config.zeta0},
                                 {"eta", r.config.eta},
                                 {"lambda0", r.config.lambda0},
                                 {"mu0", r.config.mu0},
                                 {"tMax", r.config.tMax},
                                 {"losMargin", r.config.losMargin},
                                 {"roundLow", r.config.roundLow},
                                 {"roundHigh", r.config.roundHigh},
                                 {"subproblemTol", r.config.subproblemTol},
                                 {"losPolicy", std::string(to_string(r.config.losPolicy))},
                                 {"preserveShadows", r.config.preserveShadows},
                                 {"zMin", r.config.zMin},
                                 {"zMax", r.config.zMax}}},
                 {"wallMs", r.wallMs}};
  return doc.dump(2) + "\n";
}

RunResult run_scheme(const Scenario& scenario, Scheme scheme, std::uint64_t seed, const RunOverrides& overrides) {
  const auto begin = std::chrono::steady_clock::now();
  RunResult out;
  out.scheme = scheme;
  out.seed = seed;
  out.config = scenario.solver;
  if (overrides.tMax) out.config.tMax = *overrides.tMax;
  const PlacementProblem problem = scenario.problem();
  out.initialState = initialize(scenario, seed);

  RunOptions options;
  options.scheme = scheme;
  options.recordTiming = overrides.recordTiming;
  BcdResult bcd = run_bcd(problem, out.initialState, out.config, options);

  out.finalState = std::move(bcd.state);
  out.rates = evaluate_state(out.finalState, problem, scheme_flags(scheme).commonStream);
  out.initialMinRate = bcd.trace.front().minRate;
  out.assumedMinRate = bcd.assumedMinRate;
  out.trace = std::move(bcd.trace);
  if (overrides.recordTiming) {
    out.wallMs = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - begin).count();
  }
  return out;
}

RunResult run_experiment(const std::filesystem::path& scenarioPath, Scheme scheme, std::uint64_t seed,
                         const std::filesystem::path& outDir, const RunOverrides& overrides) {
  const Scenario scenario = load_scenario(scenarioPath);
  RunResult result = run_scheme(scenario, scheme, seed, overrides);
  std::filesystem::create_directories(outDir);
  write_file(outDir / "trace.csv", trace_csv(result.trace));
  write_file(outDir / "result.json", result_json(result));
  return result;
}

const ComparisonCell& ComparisonReport::cell(std::uint64_t seed, Scheme scheme) const {
  for (const auto& c : cells) {
    if (c.seed == seed && c.scheme == scheme) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "no comparison cell for seed " + std::to_string(seed));
}

std::string ComparisonReport::to_csv() const {
  std::string out = "seed,scheme,min_rate,status\n";
  for (const auto& c : cells) {
    out += std::to_string(c.seed) + ',' + std::string(to_string(c.scheme)) + ',' +
           (c.ok ? format_double(c.minRate) : std::string()) + ',' + (c.ok ? "ok" : "failed") + '\n';
  }
  return out;
}

ComparisonReport compare_baselines(const Scenario& scenario, const std::vector<std::uint64_t>& seeds,
                                   const std::filesystem::path& outDir, unsigned threads,
                                   const RunOverrides& overrides) {
  const std::vector<Scheme> schemes = all_schemes();
  ComparisonReport report;
  for (auto seed : seeds) {
    for (Scheme s : schemes) report.cells.push_back({seed, s, false, 0.0, {}});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < report.cells.size(); i = next++) {
      ComparisonCell& cell = report.cells[i];
      try {
        const RunResult r = run_scheme(scenario, cell.scheme, cell.seed, overrides);
        cell.minRate = r.rates.minRate;
        cell.ok = true;
        if (!outDir.empty()) {
          const auto dir = outDir / ("seed-" + std::to_string(cell.seed)) / std::string(to_string(cell.scheme));
          std::filesystem::create_directories(dir);
          write_file(dir / "trace.csv", trace_csv(r.trace));
          write_file(dir / "result.json", result_json(r));
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(report.cells.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (!outDir.empty()) {
    std::filesystem::create_directories(outDir);
    write_file(outDir / "comparison.csv", report.to_csv());
  }
  return report;
}

}  // namespace rsmaplace
