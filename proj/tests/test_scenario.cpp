#include <doctest.h>

#include <fstream>
#include <sstream>

#include "rsmaplace/error.hpp"
#include "rsmaplace/scenario.hpp"
#include "support.hpp"

using namespace rsmaplace;

TEST_SUITE_BEGIN("scenario");

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("tagged power") {
  CHECK(TaggedPower::parse("30 dBm").watts == doctest::Approx(1.0));
  CHECK(TaggedPower::parse("0.5 W").watts == 0.5);
  CHECK(TaggedPower::parse("30 dBm").text == "30 dBm");
  CHECK(code_of([] { TaggedPower::parse("30 furlongs"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { TaggedPower::parse("dBm"); }) == ErrorCode::ParseError);
}

TEST_CASE("propagation in dB converts to the reference budget") {
  const auto lin = PropagationDb{}.to_linear();
  const auto ref = PropagationParams::reference();
  CHECK(lin.betaLos == doctest::Approx(ref.betaLos).epsilon(1e-12));
  CHECK(lin.betaNlos == doctest::Approx(ref.betaNlos).epsilon(1e-12));
  CHECK(lin.noisePower == doctest::Approx(ref.noisePower).epsilon(1e-12));
}

TEST_CASE("bundled scenarios load and round-trip") {
  for (const char* name : {"default.json", "users-9.json", "users-18.json"}) {
    const auto path = testsupport::scenario_dir() / name;
    const auto sc = load_scenario(path);
    CHECK_NOTHROW(sc.validate());
    const auto again = scenario_from_json(scenario_to_json(sc));
    CHECK(scenario_to_json(again) == scenario_to_json(sc));
    CHECK(scenario_to_json(sc) == read_file(path));
  }
  const auto sc = load_scenario(testsupport::scenario_dir() / "default.json");
  CHECK(sc.uavCount == 3);
  CHECK(sc.users.size() == 12);
  CHECK(sc.solver.tMax == 15);
  CHECK(sc.solver.zeta0 == 50.0);
  CHECK(sc.solver.eta == 0.9);
  CHECK(sc.solver.lambda0 == 0.05);
  CHECK(sc.solver.zMin == 101.0);
  CHECK(sc.area.xMax - sc.area.xMin == 800.0);
}

TEST_CASE("scenario parse errors") {
  const auto text = scenario_to_json(load_scenario(testsupport::scenario_dir() / "default.json"));
  CHECK(code_of([] { scenario_from_json("{not json"); }) == ErrorCode::ParseError);
  CHECK(code_of([&] {
          auto t = text;
          const auto pos = t.find("\"schemaVersion\": 1");
          REQUIRE(pos != std::string::npos);
          t.replace(pos, 18, "\"schemaVersion\": 99");
          scenario_from_json(t);
        }) == ErrorCode::SchemaVersionMismatch);
  CHECK(code_of([] { load_scenario("/nonexistent/scenario.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("scenario validation") {
  auto sc = load_scenario(testsupport::scenario_dir() / "default.json");
  auto inside = sc;
  const auto& fp = inside.buildings[0].footprint();
  inside.users[0] = {0.5 * (fp[0].x + fp[2].x), 0.5 * (fp[0].y + fp[2].y), 0.0};
  CHECK(code_of([&] { inside.validate(); }) == ErrorCode::InvalidArgument);
  auto small = sc;
  small.capacities = {1, 1, 1};
  CHECK(code_of([&] { small.validate(); }) == ErrorCode::InvalidArgument);
  auto outside = sc;
  outside.users[0].x = sc.area.xMax + 1.0;
  CHECK(code_of([&] { outside.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("generation is deterministic and valid") {
  const auto spec = GenSpec::default_spec();
  const auto a = generate_scenario(spec, 5);
  const auto b = generate_scenario(spec, 5);
  CHECK(scenario_to_json(a) == scenario_to_json(b));
  CHECK(scenario_to_json(a) != scenario_to_json(generate_scenario(spec, 6)));
  CHECK_NOTHROW(a.validate());
  CHECK(a.users.size() == spec.userCount);
  CHECK(a.buildings.size() == spec.leftBuildings + spec.rightBuildings);

  auto tight = spec;
  tight.leftBuildings = 400;
  tight.maxAttempts = 50;
  CHECK(code_of([&] { generate_scenario(tight, 1); }) == ErrorCode::GenerationFailure);

  const auto partial = gen_spec_from_json(R"({"userCount": 9})");
  CHECK(partial.userCount == 9);
  CHECK(partial.uavCount == spec.uavCount);
}

TEST_CASE("initialization") {
  const auto sc = load_scenario(testsupport::scenario_dir() / "default.json");
  const auto pr = sc.problem();
  const auto s = initialize(sc, 1);
  CHECK(s.assoc.is_binary());
  CHECK((s.assoc.values.rowwise().sum().array() == 1.0).all());
  for (std::size_t m = 0; m < s.uav_count(); ++m) {
    CHECK(s.positions[m].z == kInitialAltitude);
    CHECK(s.assoc.values.col(static_cast<Eigen::Index>(m)).sum() <= sc.capacities[m]);
    const double used = s.power.common(m) + s.power.privatePower.col(static_cast<Eigen::Index>(m)).sum();
    CHECK(used <= pr.pMax + 1e-9);
  }
  CHECK(scenario_to_json(sc) == scenario_to_json(sc));
  const auto again = initialize(sc, 1);
  CHECK(again.positions == s.positions);
  CHECK(again.assoc.values == s.assoc.values);

  auto crowded = sc;
  crowded.capacities = {1, 1, 1};
  CHECK(code_of([&] { initialize(crowded, 1); }) == ErrorCode::InfeasibleInit);
}

TEST_SUITE_END();
