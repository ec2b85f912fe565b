#include <doctest.h>

#include "rsmaplace/error.hpp"
#include "rsmaplace/scenario.hpp"
#include "rsmaplace/solver.hpp"
#include "support.hpp"

using namespace rsmaplace;

TEST_SUITE_BEGIN("solver");

namespace {

PlacementProblem open_field(std::vector<Point3> users) {
  return {Environment({}, std::move(users)), PropagationParams::reference(), {0.0, 800.0, 0.0, 800.0}, 1.0};
}

NetworkState one_link(const Point3& uav, double pc, double pk) {
  NetworkState s;
  s.positions = {uav};
  s.assoc.values = Eigen::MatrixXd::Ones(1, 1);
  s.assoc.capacity = {1};
  s.power = PowerAllocation::zeros(1, 1);
  s.power.common(0) = pc;
  s.power.privatePower(0, 0) = pk;
  return s;
}

ExpansionPoint expand(const NetworkState& s, const PlacementProblem& pr, ExpansionOptions opt = {}) {
  return build_expansion(s, pr.env, pr.propagation,
                         Eigen::MatrixXd::Constant(s.user_count(), s.uav_count(), 0.05), opt);
}

}  // namespace

TEST_CASE("config validation and names") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.eta = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.roundLow = 0.96;
  CHECK_THROWS_AS(c.validate(), Error);
  for (Scheme s : all_schemes()) CHECK(parse_scheme(to_string(s)) == s);
  CHECK_THROWS_AS(parse_scheme("tdma"), Error);
  CHECK(parse_los_policy("all-users") == LosPolicy::AllUsers);
}

TEST_CASE("rounding") {
  Eigen::MatrixXd c(1, 3);
  c << 0.97, 0.02, 0.5;
  const Eigen::MatrixXd t = apply_rounding_thresholds(c, 0.05, 0.95);
  CHECK(t(0, 0) == 1.0);
  CHECK(t(0, 1) == 0.0);
  CHECK(t(0, 2) == 0.5);

  Association a;
  a.values = Eigen::MatrixXd(1, 2);
  a.values << 0.6, 0.4;
  a.capacity = {1, 1};
  const auto r = round_association(a, SolverConfig{});
  CHECK(r.values(0, 0) == 1.0);
  CHECK(r.values(0, 1) == 0.0);

  // Capacity forces the second user elsewhere.
  Association b;
  b.values = Eigen::MatrixXd(2, 2);
  b.values << 0.7, 0.3, 0.6, 0.4;
  b.capacity = {1, 1};
  const auto rb = round_association(b, SolverConfig{});
  CHECK(rb.is_binary());
  CHECK(rb.values.colwise().sum().maxCoeff() == 1.0);
  CHECK(rb.values(0, 0) == 1.0);
  CHECK(rb.values(1, 1) == 1.0);
}

TEST_CASE("multiplier update") {
  const Eigen::MatrixXd lambda = Eigen::MatrixXd::Constant(2, 2, 0.05);
  Eigen::MatrixXd binary(2, 2);
  binary << 1, 0, 0, 1;
  const auto u = update_multipliers(lambda, binary, 0.1);
  CHECK(u.lambda == lambda);
  CHECK(u.mu == 0.2);

  Eigen::MatrixXd half = binary;
  half(0, 0) = 0.5;
  const auto v = update_multipliers(lambda, half, 0.1);
  CHECK(v.lambda(0, 0) == doctest::Approx(0.05 + 0.4));
  CHECK(v.lambda(1, 1) == 0.05);
  CHECK(update_multipliers(v.lambda, half, v.mu).mu == doctest::Approx(0.4));
}

TEST_CASE("power helpers respect the budget") {
  Association a;
  a.values = Eigen::MatrixXd(3, 2);
  a.values << 1, 0, 1, 0, 0, 1;
  a.capacity = {2, 2};
  const auto eq = equal_power_split(a, 1.0, true);
  CHECK(eq.common(0) == doctest::Approx(1.0 / 3.0));
  CHECK(eq.privatePower(2, 1) == doctest::Approx(0.5));
  CHECK(eq.privatePower(2, 0) == 0.0);
  const auto noma = equal_power_split(a, 1.0, false);
  CHECK(noma.common.cwiseAbs().maxCoeff() == 0.0);

  Association moved = a;
  moved.values << 1, 0, 0, 1, 0, 1;
  const auto r = reconcile_power(eq, a, moved, 1.0, true);
  CHECK(r.privatePower(1, 0) == 0.0);
  CHECK(r.privatePower(1, 1) > 0.0);
  for (int m = 0; m < 2; ++m) CHECK(r.common(m) + r.privatePower.col(m).sum() <= 1.0 + 1e-12);
}

TEST_CASE("position step: single link moves straight at the user") {
  const Point3 user{600, 400, 0};
  const auto pr = open_field({user});
  const Point3 x0{400, 400, 300};
  const auto s = one_link(x0, 0.3, 0.7);
  const auto exp = expand(s, pr);
  const auto sur = position_surrogate(exp);
  SolverConfig cfg;

  const auto still = solve_position(exp, sur, pr, cfg, 0.0);
  CHECK(still.positions[0] == x0);

  const double zeta = 50.0;
  const auto step = solve_position(exp, sur, pr, cfg, zeta);
  // 1-D search along the UAV-user direction: the rate rises all the way to the ball.
  const Point3 dir = (1.0 / distance(user, x0)) * (user - x0);
  double bestS = 0.0, bestRate = -INFINITY;
  for (int i = 0; i <= 5000; ++i) {
    const double sStep = zeta * i / 5000.0;
    const double r = frozen_rates(exp, {x0 + sStep * dir}, s.power)(0);
    if (r > bestRate) {
      bestRate = r;
      bestS = sStep;
    }
  }
  CHECK(bestS == doctest::Approx(zeta));
  CHECK(distance(step.positions[0], x0) == doctest::Approx(zeta).epsilon(1e-4));
  CHECK(distance(step.positions[0], x0 + bestS * dir) < 1e-2);
  CHECK(step.objective >= step.objectiveAtReference - cfg.subproblemTol);
  CHECK(step.certificate.dualityGap <= 1e-6);
}

TEST_CASE("position step honors LoS half-spaces") {
  const auto sc = load_scenario(testsupport::scenario_dir() / "default.json");
  const auto pr = sc.problem();
  const auto s = initialize(sc, 1);
  const auto exp = expand(s, pr);
  const auto sur = position_surrogate(exp);
  const auto step = solve_position(exp, sur, pr, sc.solver, sc.solver.zeta0);
  for (std::size_t m = 0; m < s.uav_count(); ++m) {
    CHECK(distance(step.positions[m], s.positions[m]) <= sc.solver.zeta0 + 1e-6);
    CHECK(step.positions[m].z >= sc.solver.zMin - 1e-6);
    if (step.losRelaxed) continue;
    std::vector<std::size_t> served = exp.served.order[m];
    std::sort(served.begin(), served.end());
    const auto lin = active_los_constraints(pr.env.blockage(), served, s.positions[m], sc.solver.losMargin);
    for (const auto& c : lin.constraints) {
      if (c.distanceAtReference - sc.solver.losMargin > sc.solver.zeta0) continue;
      CHECK(dot(c.normal, step.positions[m]) - c.offset >= -1e-6);
    }
  }
}

TEST_CASE("power step: single user takes the whole budget") {
  const Point3 user{400, 400, 0};
  const auto pr = open_field({user});
  const auto s = one_link({420, 380, 200}, 0.2, 0.3);
  const auto exp = expand(s, pr);
  const auto step = solve_power_assoc(exp, power_assoc_surrogate(exp), pr, SolverConfig{});
  CHECK(step.power.common(0) + step.power.privatePower(0, 0) == doctest::Approx(pr.pMax).epsilon(1e-6));
  NetworkState out = s;
  out.power = step.power;
  const double g = exp.gains(0, 0);
  CHECK(evaluate_state(out, pr, true).minRate ==
        doctest::Approx(std::log2(1.0 + pr.pMax * g / pr.propagation.noisePower)).epsilon(1e-6));
  CHECK(step.assoc.values.sum() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("power step: unit capacities give one user per UAV") {
  const auto pr = open_field({{100, 100, 0}, {700, 700, 0}});
  NetworkState s;
  s.positions = {{120, 120, 200}, {680, 690, 200}};
  s.assoc.values = Eigen::MatrixXd(2, 2);
  s.assoc.values << 1, 0, 0, 1;
  s.assoc.capacity = {1, 1};
  s.power = equal_power_split(s.assoc, 1.0, true);
  const auto exp = expand(s, pr);
  const auto step = solve_power_assoc(exp, power_assoc_surrogate(exp), pr, SolverConfig{});
  CHECK((step.assoc.values.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-6);
  CHECK(step.assoc.values.colwise().sum().maxCoeff() <= 1.0 + 1e-6);
  const auto rounded = round_association(step.assoc, SolverConfig{});
  CHECK(rounded.values.colwise().sum() == Eigen::RowVector2d(1.0, 1.0));
  CHECK(step.objective >= step.objectiveAtReference - 1e-7);
}

TEST_CASE("run_bcd on a small scenario") {
  auto sc = load_scenario(testsupport::scenario_dir() / "users-9.json");
  sc.solver.tMax = 6;
  const auto pr = sc.problem();
  const auto init = initialize(sc, 2);
  const auto r = run_bcd(pr, init, sc.solver);

  REQUIRE(r.trace.size() == 7);
  double zeta = sc.solver.zeta0;
  for (std::size_t t = 1; t < r.trace.size(); ++t) {
    CHECK(r.trace[t].zeta == doctest::Approx(zeta));
    CHECK(r.trace[t].maxIntegralityGap == 0.0);
    zeta *= sc.solver.eta;
  }
  CHECK(r.state.assoc.is_binary());
  CHECK((r.state.assoc.values.rowwise().sum().array() == 1.0).all());
  for (std::size_t m = 0; m < r.state.uav_count(); ++m) {
    CHECK(r.state.assoc.values.col(static_cast<Eigen::Index>(m)).sum() <= sc.capacities[m]);
    CHECK(r.state.power.common(m) + r.state.power.privatePower.col(m).sum() <= pr.pMax + 1e-9);
    CHECK(r.state.positions[m].z >= sc.solver.zMin - 1e-6);
    CHECK(r.state.positions[m].z <= sc.solver.zMax + 1e-6);
  }
  CHECK((r.state.power.privatePower.array() >= 0.0).all());
  CHECK((r.lambda.array() >= sc.solver.lambda0).all());
  CHECK(r.rates.minRate == doctest::Approx(r.trace.back().minRate));
  CHECK(r.rates.minRate > r.trace.front().minRate);
  CHECK(r.worstAscentViolation <= sc.solver.subproblemTol * 10);

  const auto again = run_bcd(pr, init, sc.solver);
  CHECK(again.rates.minRate == r.rates.minRate);
  CHECK(again.state.positions == r.state.positions);
}

TEST_CASE("fixed-position scheme keeps the initial positions") {
  auto sc = load_scenario(testsupport::scenario_dir() / "users-9.json");
  sc.solver.tMax = 3;
  const auto pr = sc.problem();
  const auto init = initialize(sc, 1);
  const auto r = run_bcd(pr, init, sc.solver, {Scheme::FixedPosition});
  CHECK(r.state.positions == init.positions);
  const auto noma = run_bcd(pr, init, sc.solver, {Scheme::Noma});
  CHECK(noma.state.power.common.cwiseAbs().maxCoeff() == 0.0);
  const auto ng = run_bcd(pr, init, sc.solver, {Scheme::NoGeometry});
  CHECK(ng.assumedMinRate >= ng.rates.minRate - 1e-12);
}

TEST_SUITE_END();
