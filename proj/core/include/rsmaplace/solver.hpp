#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "rsmaplace/channel.hpp"
#include "rsmaplace/convex.hpp"
#include "rsmaplace/geometry.hpp"
#include "rsmaplace/rsma_model.hpp"
#include "rsmaplace/surrogates.hpp"

namespace rsmaplace {

enum class LosPolicy { ServedUsers, AllUsers };

std::string_view to_string(LosPolicy policy);
/// Throws Error(InvalidArgument) on an unknown name.
LosPolicy parse_los_policy(std::string_view name);

struct SolverConfig {
  double zeta0{50.0};
  double eta{0.9};
  double lambda0{0.05};
  double mu0{0.1};
  int tMax{15};
  double losMargin{1.0};
  double roundLow{0.05};
  double roundHigh{0.95};
  double subproblemTol{1e-7};
  LosPolicy losPolicy{LosPolicy::ServedUsers};
  /// Under served-users, links that are NLoS and unserved at X_t stay in their
  /// building's shadow during the position step.
  bool preserveShadows{true};
  double zMin{101.0};
  double zMax{500.0};

  /// Throws Error(InvalidArgument) when an invariant fails.
  void validate() const;
};

enum class Scheme { Rsma, Noma, FixedPosition, FixedPower, NoGeometry };

std::string_view to_string(Scheme scheme);
/// Accepts rsma, noma, fixed-position, fixed-power, no-geometry.
Scheme parse_scheme(std::string_view name);
std::vector<Scheme> all_schemes();

struct SchemeFlags {
  bool optimizePosition{true};
  bool optimizePower{true};
  bool commonStream{true};
  bool assumeLos{false};
};

SchemeFlags scheme_flags(Scheme scheme);

/// Everything fixed over a run: obstacles, users, link budget and limits.
struct PlacementProblem {
  Environment env;
  PropagationParams propagation;
  AreaBounds area;
  double pMax{1.0};
};

struct PositionStep {
  std::vector<Point3> positions;
  double objective{0.0};
  double objectiveAtReference{0.0};
  std::size_t losConstraints{0};
  std::size_t shadowConstraints{0};
  /// LoS half-spaces could not all be met inside the trust region; they were
  /// relaxed by the smallest uniform amount that made the step feasible.
  bool losRelaxed{false};
  double losRelaxation{0.0};
  Certificate certificate;
};

/// Maximizes min_k of the position surrogate over the trust-region balls,
/// the flight box and the active LoS half-spaces. Serving links are taken
/// from `exp`; `enforceLos` false skips the LoS half-spaces.
PositionStep solve_position(const ExpansionPoint& exp, const PositionSurrogate& surrogate,
                            const PlacementProblem& problem, const SolverConfig& config, double zeta,
                            bool enforceLos = true);

struct PowerAssocStep {
  PowerAllocation power;
  Association assoc;  // fractional
  double objective{0.0};
  double objectiveAtReference{0.0};
  Certificate certificate;
};

/// Maximizes t + rhoLb(C) with t below every user's surrogate rate, subject
/// to the power budgets, nonnegativity, capacities and unit rows.
PowerAssocStep solve_power_assoc(const ExpansionPoint& exp, const PowerAssocSurrogate& surrogate,
                                 const PlacementProblem& problem, const SolverConfig& config);

/// Threshold step only: <= low goes to 0, >= high goes to 1, the rest stays.
Eigen::MatrixXd apply_rounding_thresholds(const Eigen::MatrixXd& C, double low, double high);

/// Thresholds followed by a repair that leaves exactly one 1 per row within
/// capacity. Rows are settled in order of their largest entry, each going to
/// its largest-valued UAV that still has room.
Association round_association(const Association& fractional, const SolverConfig& config);

struct MultiplierUpdate {
  Eigen::MatrixXd lambda;
  double mu{0.0};
};

/// lambda += (mu / S) c (1 - c) with S = sum (c (1 - c))^2; mu doubles.
MultiplierUpdate update_multipliers(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& C, double mu);

/// Drops private power on unserved pairs, hands newcomers the mean private
/// power of the UAV's retained users and scales each UAV back into budget.
PowerAllocation reconcile_power(const PowerAllocation& power, const Association& previous,
                                const Association& current, double pMax, bool commonStream);

/// pMax / (served + 1) on every stream (private only when `commonStream` is false).
PowerAllocation equal_power_split(const Association& assoc, double pMax, bool commonStream);

/// True-model rates of a binary state under the scheme's access mode.
RateBreakdown evaluate_state(const NetworkState& state, const PlacementProblem& problem, bool commonStream,
                             bool assumeLos = false);

/// Served links whose true link state is NLoS.
std::size_t count_los_violations(const NetworkState& state, const Environment& env);

struct IterationTrace {
  int iter{0};
  double minRate{0.0};
  double surrogateObjective{0.0};
  double penaltyValue{0.0};
  double maxIntegralityGap{0.0};
  double zeta{0.0};
  std::size_t losViolations{0};
  double wallMs{0.0};
};

struct BcdResult {
  NetworkState state;
  RateBreakdown rates;
  std::vector<IterationTrace> trace;
  Eigen::MatrixXd lambda;
  /// Min rate under the link model the scheme optimized with.
  double assumedMinRate{0.0};
  /// Worst shortfall of a subproblem against its incumbent value.
  double worstAscentViolation{0.0};
  int losRecoveries{0};
};

struct RunOptions {
  Scheme scheme{Scheme::Rsma};
  bool recordTiming{false};
  std::function<void(const IterationTrace&)> onIteration;
};

/// Algorithm: alternate the position and power/association subproblems,
/// round, update multipliers and shrink the trust region for tMax iterations.
BcdResult run_bcd(const PlacementProblem& problem, const NetworkState& init, const SolverConfig& config,
                  const RunOptions& options = {});

}  // namespace rsmaplace
