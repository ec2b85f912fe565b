#include "rsmaplace/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rsmaplace/error.hpp"

namespace rsmaplace {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const Json& field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) parse_fail(path + " is not an object");
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail("missing key '" + path + (path.empty() ? "" : ".") + key + "'");
  return *it;
}

template <typename T>
T as(const Json& value, const std::string& path) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    parse_fail("field '" + path + "' has the wrong type");
  }
}

template <typename T>
T get(const Json& obj, const char* key, const std::string& path) {
  return as<T>(field(obj, key, path), path.empty() ? key : path + "." + key);
}

template <typename T>
void get_optional(const Json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it != obj.end()) out = as<T>(*it, key);
}

Json parse_document(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t offset = std::min(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n');
    std::ostringstream msg;
    msg << "line " << line << ": malformed JSON";
    parse_fail(msg.str());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) parse_fail("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json area_to_json(const AreaBounds& a) {
  return Json{{"xMin", a.xMin}, {"xMax", a.xMax}, {"yMin", a.yMin}, {"yMax", a.yMax}};
}

AreaBounds area_from_json(const Json& j, const std::string& path) {
  return {get<double>(j, "xMin", path), get<double>(j, "xMax", path), get<double>(j, "yMin", path),
          get<double>(j, "yMax", path)};
}

Json propagation_to_json(const PropagationDb& p) {
  return Json{{"alphaLos", p.alphaLos},
              {"alphaNlos", p.alphaNlos},
              {"betaLosDb", p.betaLosDb},
              {"betaNlosDb", p.betaNlosDb},
              {"noiseDbm", p.noiseDbm}};
}

PropagationDb propagation_from_json(const Json& j, const std::string& path) {
  return {get<double>(j, "alphaLos", path), get<double>(j, "alphaNlos", path), get<double>(j, "betaLosDb", path),
          get<double>(j, "betaNlosDb", path), get<double>(j, "noiseDbm", path)};
}

Json solver_to_json(const SolverConfig& c) {
  return Json{{"zeta0", c.zeta0},
              {"eta", c.eta},
              {"lambda0", c.lambda0},
              {"mu0", c.mu0},
              {"tMax", c.tMax},
              {"losMargin", c.losMargin},
              {"roundLow", c.roundLow},
              {"roundHigh", c.roundHigh},
              {"subproblemTol", c.subproblemTol},
              {"losPolicy", std::string(to_string(c.losPolicy))},
              {"preserveShadows", c.preserveShadows},
              {"zMin", c.zMin},
              {"zMax", c.zMax}};
}

SolverConfig solver_from_json(const Json& j, const std::string& path) {
  SolverConfig c;
  c.zeta0 = get<double>(j, "zeta0", path);
  c.eta = get<double>(j, "eta", path);
  c.lambda0 = get<double>(j, "lambda0", path);
  c.mu0 = get<double>(j, "mu0", path);
  c.tMax = get<int>(j, "tMax", path);
  c.losMargin = get<double>(j, "losMargin", path);
  c.roundLow = get<double>(j, "roundLow", path);
  c.roundHigh = get<double>(j, "roundHigh", path);
  c.subproblemTol = get<double>(j, "subproblemTol", path);
  try {
    c.losPolicy = parse_los_policy(get<std::string>(j, "losPolicy", path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    parse_fail("field '" + path + ".losPolicy': " + e.what());
  }
  c.preserveShadows = get<bool>(j, "preserveShadows", path);
  c.zMin = get<double>(j, "zMin", path);
  c.zMax = get<double>(j, "zMax", path);
  return c;
}

/// Uniform double in [a, b) from raw engine bits, identical on every platform.
double uniform(std::mt19937_64& rng, double a, double b) {
  return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

double round_cm(double v) { return std::round(v * 100.0) / 100.0; }

struct Rect {
  double xMin, xMax, yMin, yMax;
};

bool overlaps(const Rect& a, const Rect& b, double gap) {
  return a.xMin < b.xMax + gap && b.xMin < a.xMax + gap && a.yMin < b.yMax + gap && b.yMin < a.yMax + gap;
}

double horizontal_distance(const Point3& a, const Point3& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TaggedPower TaggedPower::parse(const std::string& text) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  while (begin < end && *begin == ' ') ++begin;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{}) parse_fail("power '" + text + "' has no numeric value");
  while (ptr < end && *ptr == ' ') ++ptr;
  const std::string unit(ptr, end);
  TaggedPower out{text, 0.0};
  if (unit == "dBm") {
    out.watts = dbm_to_watts(value);
  } else if (unit == "W") {
    out.watts = value;
  } else if (unit == "mW") {
    out.watts = value * 1e-3;
  } else {
    parse_fail("power '" + text + "' needs a unit of dBm, W or mW");
  }
  if (!(out.watts > 0.0)) parse_fail("power '" + text + "' must be positive");
  return out;
}

PropagationParams PropagationDb::to_linear() const {
  PropagationParams p;
  p.alphaLos = alphaLos;
  p.alphaNlos = alphaNlos;
  p.betaLos = db_to_linear(betaLosDb);
  p.betaNlos = db_to_linear(betaNlosDb);
  p.noisePower = dbm_to_watts(noiseDbm);
  return p;
}

void Scenario::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (area.xMin >= area.xMax || area.yMin >= area.yMax) fail("area bounds are empty");
  if (uavCount < 1) fail("at least one UAV is required");
  if (capacities.size() != uavCount) fail("one capacity per UAV is required");
  if (std::any_of(capacities.begin(), capacities.end(), [](int c) { return c < 1; })) {
    fail("capacities must be positive");
  }
  const long total = std::accumulate(capacities.begin(), capacities.end(), 0L);
  if (total < static_cast<long>(users.size())) fail("capacities cannot host every user");
  for (std::size_t k = 0; k < users.size(); ++k) {
    const Point3& u = users[k];
    if (!area.contains(u.x, u.y)) fail("user " + std::to_string(k) + " lies outside the area");
    for (const auto& b : buildings) {
      if (b.contains_horizontal(u.x, u.y)) fail("user " + std::to_string(k) + " stands inside a building");
    }
  }
  propagation.to_linear().validate();
  solver.validate();
}

PlacementProblem Scenario::problem() const {
  return {Environment(buildings, users), propagation.to_linear(), area, pMax.watts};
}

std::string scenario_to_json(const Scenario& s) {
  Json buildings = Json::array();
  for (const auto& b : s.buildings) {
    Json footprint = Json::array();
    for (const auto& v : b.footprint()) footprint.push_back(Json::array({v.x, v.y}));
    buildings.push_back(Json{{"footprint", footprint}, {"height", b.height()}});
  }
  Json users = Json::array();
  for (const auto& u : s.users) users.push_back(Json::array({u.x, u.y, u.z}));
  const Json doc{{"schemaVersion", kScenarioSchemaVersion},
                 {"name", s.name},
                 {"seed", s.seed},
                 {"areaBounds", area_to_json(s.area)},
                 {"uavCount", s.uavCount},
                 {"capacities", s.capacities},
                 {"pMax", s.pMax.text},
                 {"propagation", propagation_to_json(s.propagation)},
                 {"solver", solver_to_json(s.solver)},
                 {"buildings", buildings},
                 {"users", users}};
  return doc.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  const Json doc = parse_document(text);
  const int version = get<int>(doc, "schemaVersion", "");
  if (version != kScenarioSchemaVersion) {
    throw Error(ErrorCode::SchemaVersionMismatch,
                "schemaVersion " + std::to_string(version) + ", expected " + std::to_string(kScenarioSchemaVersion));
  }
  Scenario s;
  s.name = get<std::string>(doc, "name", "");
  s.seed = get<std::uint64_t>(doc, "seed", "");
  s.area = area_from_json(field(doc, "areaBounds", ""), "areaBounds");
  s.uavCount = get<std::size_t>(doc, "uavCount", "");
  s.capacities = get<std::vector<int>>(doc, "capacities", "");
  s.pMax = TaggedPower::parse(get<std::string>(doc, "pMax", ""));
  s.propagation = propagation_from_json(field(doc, "propagation", ""), "propagation");
  s.solver = solver_from_json(field(doc, "solver", ""), "solver");

  const Json& buildings = field(doc, "buildings", "");
  if (!buildings.is_array()) parse_fail("field 'buildings' must be an array");
  for (std::size_t i = 0; i < buildings.size(); ++i) {
    const std::string path = "buildings[" + std::to_string(i) + "]";
    const auto corners = get<std::vector<std::array<double, 2>>>(buildings[i], "footprint", path);
    std::vector<Point2> footprint;
    for (const auto& c : corners) footprint.push_back({c[0], c[1]});
    try {
      s.buildings.emplace_back(std::move(footprint), get<double>(buildings[i], "height", path));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) throw;
      parse_fail(path + ": " + e.what());
    }
  }
  for (const auto& u : get<std::vector<std::array<double, 3>>>(doc, "users", "")) {
    s.users.push_back({u[0], u[1], u[2]});
  }
  try {
    s.validate();
  } catch (const Error& e) {
    parse_fail(e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  try {
    return scenario_from_json(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << scenario_to_json(scenario);
}

GenSpec GenSpec::default_spec() { return GenSpec{}; }

GenSpec gen_spec_from_json(const std::string& text) {
  const Json doc = parse_document(text);
  GenSpec spec = GenSpec::default_spec();
  get_optional(doc, "name", spec.name);
  if (doc.contains("areaBounds")) spec.area = area_from_json(doc["areaBounds"], "areaBounds");
  get_optional(doc, "userCount", spec.userCount);
  get_optional(doc, "uavCount", spec.uavCount);
  get_optional(doc, "capacities", spec.capacities);
  get_optional(doc, "leftBuildings", spec.leftBuildings);
  get_optional(doc, "rightBuildings", spec.rightBuildings);
  if (doc.contains("leftHeight")) {
    spec.leftHeight = {get<double>(doc["leftHeight"], "min", "leftHeight"),
                       get<double>(doc["leftHeight"], "max", "leftHeight")};
  }
  if (doc.contains("rightHeight")) {
    spec.rightHeight = {get<double>(doc["rightHeight"], "min", "rightHeight"),
                        get<double>(doc["rightHeight"], "max", "rightHeight")};
  }
  get_optional(doc, "sideMin", spec.sideMin);
  get_optional(doc, "sideMax", spec.sideMax);
  get_optional(doc, "clearance", spec.clearance);
  get_optional(doc, "userHeight", spec.userHeight);
  if (doc.contains("propagation")) spec.propagation = propagation_from_json(doc["propagation"], "propagation");
  get_optional(doc, "pMax", spec.pMax);
  if (doc.contains("solver")) spec.solver = solver_from_json(doc["solver"], "solver");
  get_optional(doc, "maxAttempts", spec.maxAttempts);
  return spec;
}

GenSpec load_gen_spec(const std::filesystem::path& path) { return gen_spec_from_json(read_file(path)); }

Scenario generate_scenario(const GenSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Scenario s;
  s.name = spec.name;
  s.seed = seed;
  s.area = spec.area;
  s.uavCount = spec.uavCount;
  s.capacities = spec.capacities;
  s.propagation = spec.propagation;
  s.pMax = TaggedPower::parse(spec.pMax);
  s.solver = spec.solver;

  const double xMid = 0.5 * (spec.area.xMin + spec.area.xMax);
  std::vector<Rect> placed;
  auto place = [&](std::size_t count, double xLo, double xHi, HeightRange heights) {
    for (std::size_t i = 0; i < count; ++i) {
      bool done = false;
      for (int attempt = 0; attempt < spec.maxAttempts && !done; ++attempt) {
        const double w = round_cm(uniform(rng, spec.sideMin, spec.sideMax));
        const double d = round_cm(uniform(rng, spec.sideMin, spec.sideMax));
        const double x0 = round_cm(uniform(rng, xLo, xHi - w));
        const double y0 = round_cm(uniform(rng, spec.area.yMin, spec.area.yMax - d));
        const Rect r{x0, x0 + w, y0, y0 + d};
        if (std::any_of(placed.begin(), placed.end(), [&](const Rect& o) { return overlaps(r, o, spec.clearance); })) {
          continue;
        }
        const double h = round_cm(uniform(rng, heights.min, heights.max));
        placed.push_back(r);
        s.buildings.push_back(BuildingPrism::axis_aligned_box(r.xMin, r.xMax, r.yMin, r.yMax, h));
        done = true;
      }
      if (!done) throw Error(ErrorCode::GenerationFailure, "could not place building " + std::to_string(i));
    }
  };
  place(spec.leftBuildings, spec.area.xMin, xMid, spec.leftHeight);
  place(spec.rightBuildings, xMid, spec.area.xMax, spec.rightHeight);

  for (std::size_t k = 0; k < spec.userCount; ++k) {
    bool done = false;
    for (int attempt = 0; attempt < spec.maxAttempts && !done; ++attempt) {
      const double x = round_cm(uniform(rng, spec.area.xMin, spec.area.xMax));
      const double y = round_cm(uniform(rng, spec.area.yMin, spec.area.yMax));
      const Rect dot{x, x, y, y};
      if (std::any_of(placed.begin(), placed.end(), [&](const Rect& o) { return overlaps(dot, o, spec.clearance); })) {
        continue;
      }
      s.users.push_back({x, y, spec.userHeight});
      done = true;
    }
    if (!done) throw Error(ErrorCode::GenerationFailure, "could not place user " + std::to_string(k));
  }
  s.validate();
  return s;
}

NetworkState initialize(const Scenario& scenario, std::uint64_t seed) {
  const std::size_t K = scenario.users.size();
  const std::size_t M = scenario.uavCount;
  const long total = std::accumulate(scenario.capacities.begin(), scenario.capacities.end(), 0L);
  if (scenario.capacities.size() != M || total < static_cast<long>(K)) {
    throw Error(ErrorCode::InfeasibleInit, "capacities cannot host every user");
  }
  if (K < M) throw Error(ErrorCode::InfeasibleInit, "fewer users than UAVs");
  const auto& users = scenario.users;

  // k-means++ seeding on the ground plane.
  std::mt19937_64 rng(seed);
  std::vector<Point3> centers;
  centers.push_back(users[rng() % K]);
  std::vector<double> d2(K);
  while (centers.size() < M) {
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      d2[k] = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) d2[k] = std::min(d2[k], std::pow(horizontal_distance(users[k], c), 2));
      sum += d2[k];
    }
    std::size_t pick = 0;
    if (sum > 0.0) {
      const double target = uniform(rng, 0.0, sum);
      double acc = 0.0;
      pick = K - 1;
      for (std::size_t k = 0; k < K; ++k) {
        acc += d2[k];
        if (target < acc && d2[k] > 0.0) {
          pick = k;
          break;
        }
      }
    } else {
      pick = centers.size();
    }
    centers.push_back(users[pick]);
  }

  std::vector<std::size_t> cluster(K, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t best = 0;
      for (std::size_t m = 1; m < M; ++m) {
        if (horizontal_distance(users[k], centers[m]) < horizontal_distance(users[k], centers[best])) best = m;
      }
      changed |= best != cluster[k] || iter == 0;
      cluster[k] = best;
    }
    std::vector<std::size_t> sizes(M, 0);
    for (std::size_t k = 0; k < K; ++k) ++sizes[cluster[k]];
    for (std::size_t m = 0; m < M; ++m) {
      if (sizes[m] > 0) continue;
      // Reseed an empty cluster with the point farthest from its center.
      std::size_t far = 0;
      double farDist = -1.0;
      for (std::size_t k = 0; k < K; ++k) {
        if (sizes[cluster[k]] < 2) continue;
        const double d = horizontal_distance(users[k], centers[cluster[k]]);
        if (d > farDist) {
          far = k;
          farDist = d;
        }
      }
      --sizes[cluster[far]];
      cluster[far] = m;
      ++sizes[m];
      changed = true;
    }
    for (std::size_t m = 0; m < M; ++m) {
      Point3 mean;
      for (std::size_t k = 0; k < K; ++k) {
        if (cluster[k] == m) mean += users[k];
      }
      centers[m] = (1.0 / static_cast<double>(sizes[m])) * mean;
    }
    if (!changed) break;
  }

  NetworkState state;
  state.positions.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::size_t medoid = K;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      if (cluster[k] != m) continue;
      double cost = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        if (cluster[j] == m) cost += horizontal_distance(users[k], users[j]);
      }
      if (cost < best) {
        best = cost;
        medoid = k;
      }
    }
    state.positions[m] = {users[medoid].x, users[medoid].y, kInitialAltitude};
  }

  const PlacementProblem problem = scenario.problem();
  const LinkTable links = evaluate_links(problem.env, state.positions, problem.propagation);
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return links.gains.row(a).maxCoeff() > links.gains.row(b).maxCoeff();
  });
  state.assoc = {Eigen::MatrixXd::Zero(K, M), scenario.capacities};
  std::vector<int> load(M, 0);
  for (std::size_t k : order) {
    std::size_t best = kNoUav;
    for (std::size_t m = 0; m < M; ++m) {
      if (load[m] >= scenario.capacities[m]) continue;
      if (best == kNoUav || links.gains(k, m) > links.gains(k, best)) best = m;
    }
    state.assoc.values(k, best) = 1.0;
    ++load[best];
  }
  state.power = equal_power_split(state.assoc, scenario.pMax.watts, true);
  return state;
}

}  // namespace rsmaplace
