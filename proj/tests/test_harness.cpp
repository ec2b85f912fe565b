#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rsmaplace/harness.hpp"
#include "support.hpp"

using namespace rsmaplace;

TEST_SUITE_BEGIN("harness");

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rsmaplace-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 2.0e-14, -46.43, 0.0, 12345.678}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(50.0) == "50");
}

TEST_CASE("run_experiment files") {
  const auto path = testsupport::scenario_dir() / "users-9.json";
  const auto dirA = scratch("a");
  const auto dirB = scratch("b");
  RunOverrides o;
  o.tMax = 4;
  const auto r = run_experiment(path, Scheme::Rsma, 3, dirA, o);
  run_experiment(path, Scheme::Rsma, 3, dirB, o);

  const auto trace = lines(read_file(dirA / "trace.csv"));
  REQUIRE(trace.size() == 1 + 5);
  CHECK(trace[0] == "iter,min_rate,surrogate_obj,penalty,max_gap,zeta,los_violations,wall_ms");

  const auto doc = nlohmann::json::parse(read_file(dirA / "result.json"));
  const std::string lastRate = trace.back().substr(trace.back().find(',') + 1);
  CHECK(doc["minRate"].get<double>() == std::stod(lastRate.substr(0, lastRate.find(','))));
  CHECK(doc["minRate"].get<double>() == r.rates.minRate);
  CHECK(doc["association"].size() == 9);

  CHECK(read_file(dirA / "trace.csv") == read_file(dirB / "trace.csv"));
  CHECK(read_file(dirA / "result.json") == read_file(dirB / "result.json"));
  std::filesystem::remove_all(dirA);
  std::filesystem::remove_all(dirB);
}

TEST_CASE("compare_baselines") {
  const auto sc = load_scenario(testsupport::scenario_dir() / "users-9.json");
  const auto dir = scratch("cmp");
  RunOverrides o;
  o.tMax = 3;
  const auto report = compare_baselines(sc, {1, 2}, dir, 0, o);
  REQUIRE(report.cells.size() == 10);
  for (const auto& c : report.cells) CHECK_MESSAGE(c.ok, c.error);
  CHECK(lines(report.to_csv()).size() == 11);
  CHECK(read_file(dir / "comparison.csv") == report.to_csv());

  const auto fixed = nlohmann::json::parse(read_file(dir / "seed-1" / "fixed-position" / "result.json"));
  const auto init = initialize(sc, 1);
  for (std::size_t m = 0; m < init.uav_count(); ++m) {
    CHECK(fixed["positions"][m][0].get<double>() == init.positions[m].x);
    CHECK(fixed["positions"][m][1].get<double>() == init.positions[m].y);
    CHECK(fixed["positions"][m][2].get<double>() == init.positions[m].z);
  }
  const auto ng = nlohmann::json::parse(read_file(dir / "seed-2" / "no-geometry" / "result.json"));
  CHECK(ng["assumedMinRate"].get<double>() >= ng["minRate"].get<double>());

  // Thread count does not change the numbers.
  const auto serial = compare_baselines(sc, {1, 2}, {}, 1, o);
  CHECK(serial.to_csv() == report.to_csv());
  std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
