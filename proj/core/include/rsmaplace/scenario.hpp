#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rsmaplace/channel.hpp"
#include "rsmaplace/geometry.hpp"
#include "rsmaplace/rsma_model.hpp"
#include "rsmaplace/solver.hpp"

namespace rsmaplace {

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr double kInitialAltitude = 300.0;

/// Power written with a unit suffix, "30 dBm" or "1 W". The text is kept so
/// that files round-trip unchanged.
struct TaggedPower {
  std::string text;
  double watts{0.0};

  /// Throws Error(ParseError) on a malformed value or unknown unit.
  static TaggedPower parse(const std::string& text);
};

/// Link budget as written in scenario files (gains in dB, noise in dBm).
struct PropagationDb {
  double alphaLos{2.0};
  double alphaNlos{3.3};
  double betaLosDb{-46.43};
  double betaNlosDb{-56.43};
  double noiseDbm{-107.0};

  PropagationParams to_linear() const;
};

struct Scenario {
  std::string name;
  std::uint64_t seed{0};
  AreaBounds area;
  std::vector<BuildingPrism> buildings;
  std::vector<Point3> users;
  std::size_t uavCount{1};
  std::vector<int> capacities;
  PropagationDb propagation;
  TaggedPower pMax{"30 dBm", 1.0};
  SolverConfig solver;

  /// Throws Error(InvalidArgument) when users leave the area or sit in a
  /// footprint, capacities mismatch the fleet or cannot host every user.
  void validate() const;
  PlacementProblem problem() const;
};

/// Throws Error(ParseError) naming the offending key or position, or
/// Error(SchemaVersionMismatch).
Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

struct HeightRange {
  double min{0.0};
  double max{0.0};
};

/// Recipe for a random city: rectangular buildings, tall ones on the left
/// half of the area and low ones on the right, users uniform over free ground.
struct GenSpec {
  std::string name{"default"};
  AreaBounds area{0.0, 800.0, 0.0, 800.0};
  std::size_t userCount{12};
  std::size_t uavCount{3};
  std::vector<int> capacities{6, 6, 6};
  std::size_t leftBuildings{14};
  std::size_t rightBuildings{14};
  HeightRange leftHeight{60.0, 100.0};
  HeightRange rightHeight{15.0, 40.0};
  double sideMin{30.0};
  double sideMax{70.0};
  /// Minimum clearance between footprints and between users and footprints.
  double clearance{10.0};
  double userHeight{0.0};
  PropagationDb propagation;
  std::string pMax{"30 dBm"};
  SolverConfig solver;
  int maxAttempts{2000};

  static GenSpec default_spec();
};

/// Fields missing from the document keep their default_spec() values.
GenSpec gen_spec_from_json(const std::string& text);
GenSpec load_gen_spec(const std::filesystem::path& path);

/// Deterministic in (spec, seed). Throws Error(GenerationFailure) when
/// rejection sampling runs out of attempts.
Scenario generate_scenario(const GenSpec& spec, std::uint64_t seed);

/// Seeded k-means++ clusters on the ground plane, one UAV at 300 m above
/// each cluster medoid, greedy capacity-aware association by gain and an
/// equal power split over common and private streams. Throws
/// Error(InfeasibleInit) when the fleet cannot host every user.
NetworkState initialize(const Scenario& scenario, std::uint64_t seed);

}  // namespace rsmaplace
