#include "rsmaplace/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "rsmaplace/error.hpp"

namespace rsmaplace {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

ConcaveFunction to_concave(const UserRateModel& model) {
  ConcaveFunction f;
  f.constant = model.constant;
  for (const auto& term : model.terms) {
    const std::size_t i0 = 3 * term.uav;
    if (term.linearized) {
      const Point3 d = term.reference - term.anchor;
      const double w = -2.0 * term.weight;
      f.add_linear(i0, w * d.x).add_linear(i0 + 1, w * d.y).add_linear(i0 + 2, w * d.z);
      f.add_constant(-w * dot(d, term.reference));
    } else {
      f.add_constant(term.weight * term.y0);
      f.quadratics.push_back({term.weight, {i0, i0 + 1, i0 + 2}, {term.anchor.x, term.anchor.y, term.anchor.z}});
    }
  }
  return f;
}

std::vector<Point3> unpack_positions(const Eigen::VectorXd& x, std::size_t M) {
  std::vector<Point3> X(M);
  for (std::size_t m = 0; m < M; ++m) X[m] = {x(3 * m), x(3 * m + 1), x(3 * m + 2)};
  return X;
}

double min_over_served(const Eigen::VectorXd& values, const ServedSets& served) {
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < served.servingUav.size(); ++k) {
    if (served.servingUav[k] != kNoUav) v = std::min(v, values(k));
  }
  return std::isfinite(v) ? v : 0.0;
}

/// Position subproblem in epigraph form without the LoS rows.
ConvexSubproblem position_problem(const ExpansionPoint& exp, const PositionSurrogate& surrogate,
                                  const PlacementProblem& problem, const SolverConfig& config, double zeta) {
  const std::size_t M = exp.uav_count();
  const std::size_t tIdx = 3 * M;
  ConvexSubproblem p;
  p.variableCount = 3 * M + 1;
  p.objective.add_linear(tIdx, 1.0);
  for (std::size_t k = 0; k < surrogate.pieces.size(); ++k) {
    for (const auto& piece : surrogate.pieces[k]) {
      ConcaveFunction f = to_concave(piece);
      f.add_linear(tIdx, -1.0);
      p.add_constraint(std::move(f), "rate");
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    const Point3& c = exp.state.positions[m];
    ConcaveFunction ball;
    ball.constant = zeta * zeta;
    ball.quadratics.push_back({1.0, {3 * m, 3 * m + 1, 3 * m + 2}, {c.x, c.y, c.z}});
    p.add_constraint(std::move(ball), "trust-region");
    p.add_bounds(3 * m, problem.area.xMin, problem.area.xMax, "flight-box");
    p.add_bounds(3 * m + 1, problem.area.yMin, problem.area.yMax, "flight-box");
    p.add_bounds(3 * m + 2, config.zMin, config.zMax, "flight-box");
  }
  p.start = Eigen::VectorXd::Zero(p.variableCount);
  for (std::size_t m = 0; m < M; ++m) {
    p.start.segment<3>(3 * m) << exp.state.positions[m].x, exp.state.positions[m].y, exp.state.positions[m].z;
  }
  p.start(tIdx) = min_over_served(surrogate.values(exp.state.positions), exp.served) - 1.0;
  return p;
}

struct LosRow {
  std::size_t uav;
  LinearConstraint constraint;
};

void add_los_rows(ConvexSubproblem& p, const std::vector<LosRow>& rows, double relax, std::ptrdiff_t slackVar) {
  for (const auto& row : rows) {
    const std::size_t i0 = 3 * row.uav;
    ConcaveFunction f;
    f.add_linear(i0, row.constraint.normal.x)
        .add_linear(i0 + 1, row.constraint.normal.y)
        .add_linear(i0 + 2, row.constraint.normal.z)
        .add_constant(relax - row.constraint.offset);
    if (slackVar >= 0) f.add_linear(static_cast<std::size_t>(slackVar), 1.0);
    p.add_constraint(std::move(f), "los");
  }
}

}  // namespace

std::string_view to_string(LosPolicy policy) {
  return policy == LosPolicy::ServedUsers ? "served-users" : "all-users";
}

LosPolicy parse_los_policy(std::string_view name) {
  if (name == "served-users") return LosPolicy::ServedUsers;
  if (name == "all-users") return LosPolicy::AllUsers;
  throw Error(ErrorCode::InvalidArgument, "unknown LoS policy '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  require(zeta0 > 0.0, "zeta0 must be positive");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  require(lambda0 >= 0.0, "lambda0 must be nonnegative");
  require(mu0 > 0.0, "mu0 must be positive");
  require(tMax >= 1, "tMax must be at least 1");
  require(losMargin >= 0.0, "losMargin must be nonnegative");
  require(roundLow >= 0.0 && roundLow < roundHigh && roundHigh <= 1.0, "need 0 <= roundLow < roundHigh <= 1");
  require(subproblemTol > 0.0, "subproblemTol must be positive");
  require(zMin < zMax, "zMin must be below zMax");
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Rsma: return "rsma";
    case Scheme::Noma: return "noma";
    case Scheme::FixedPosition: return "fixed-position";
    case Scheme::FixedPower: return "fixed-power";
    case Scheme::NoGeometry: return "no-geometry";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : all_schemes()) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scheme '" + std::string(name) + "'");
}

std::vector<Scheme> all_schemes() {
  return {Scheme::Rsma, Scheme::Noma, Scheme::FixedPosition, Scheme::FixedPower, Scheme::NoGeometry};
}

SchemeFlags scheme_flags(Scheme scheme) {
  SchemeFlags f;
  switch (scheme) {
    case Scheme::Rsma: break;
    case Scheme::Noma: f.commonStream = false; break;
    case Scheme::FixedPosition: f.optimizePosition = false; break;
    case Scheme::FixedPower: f.optimizePower = false; break;
    case Scheme::NoGeometry: f.assumeLos = true; break;
  }
  return f;
}

PositionStep solve_position(const ExpansionPoint& exp, const PositionSurrogate& surrogate,
                            const PlacementProblem& problem, const SolverConfig& config, double zeta,
                            bool enforceLos) {
  const std::size_t M = exp.uav_count();
  const std::size_t K = exp.user_count();
  PositionStep step;
  step.positions = exp.state.positions;
  step.objectiveAtReference = min_over_served(surrogate.values(exp.state.positions), exp.served);
  step.objective = step.objectiveAtReference;
  if (zeta <= 0.0) return step;

  // Half-spaces that cannot bind inside the trust region are dropped.
  std::vector<LosRow> rows;
  if (enforceLos) {
    for (std::size_t m = 0; m < M; ++m) {
      std::vector<std::size_t> users;
      if (config.losPolicy == LosPolicy::ServedUsers) {
        users = exp.served.order[m];
        std::sort(users.begin(), users.end());
      } else {
        users.resize(K);
        std::iota(users.begin(), users.end(), 0);
      }
      const LosLinearization lin =
          active_los_constraints(problem.env.blockage(), users, exp.state.positions[m], config.losMargin);
      for (const auto& c : lin.constraints) {
        if (c.distanceAtReference - config.losMargin > zeta) continue;
        rows.push_back({m, c});
      }
    }
  }
  step.losConstraints = rows.size();

  std::vector<LosRow> shadows;
  if (enforceLos && config.preserveShadows && config.losPolicy == LosPolicy::ServedUsers) {
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t k = 0; k < K; ++k) {
        if (exp.served.servingUav[k] == m || exp.linkStates[k * M + m] != LinkState::NLoS) continue;
        for (const auto& c : shadow_constraints(problem.env.blockage()[k], exp.state.positions[m], config.losMargin)) {
          if (dot(c.normal, exp.state.positions[m]) - c.offset > zeta) continue;
          shadows.push_back({m, c});
        }
      }
    }
  }
  step.shadowConstraints = shadows.size();

  auto solve_main = [&](double relax) {
    ConvexSubproblem p = position_problem(exp, surrogate, problem, config, zeta);
    add_los_rows(p, rows, relax, -1);
    add_los_rows(p, shadows, 0.0, -1);
    return backend_solve(p, config.subproblemTol);
  };

  BackendResult result;
  try {
    result = solve_main(0.0);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SubproblemInfeasible || rows.empty()) throw;
    // Smallest uniform relaxation of the LoS half-spaces inside the trust region.
    ConvexSubproblem r;
    r.variableCount = 3 * M + 1;
    const std::size_t vIdx = 3 * M;
    r.objective.add_linear(vIdx, -1.0);
    for (std::size_t m = 0; m < M; ++m) {
      const Point3& c = exp.state.positions[m];
      ConcaveFunction ball;
      ball.constant = zeta * zeta;
      ball.quadratics.push_back({1.0, {3 * m, 3 * m + 1, 3 * m + 2}, {c.x, c.y, c.z}});
      r.add_constraint(std::move(ball), "trust-region");
      r.add_bounds(3 * m, problem.area.xMin, problem.area.xMax, "flight-box");
      r.add_bounds(3 * m + 1, problem.area.yMin, problem.area.yMax, "flight-box");
      r.add_bounds(3 * m + 2, config.zMin, config.zMax, "flight-box");
    }
    add_los_rows(r, rows, 0.0, static_cast<std::ptrdiff_t>(vIdx));
    add_los_rows(r, shadows, 0.0, -1);
    r.start = Eigen::VectorXd::Zero(r.variableCount);
    double worst = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const Point3& c = exp.state.positions[m];
      r.start.segment<3>(3 * m) << c.x, c.y, c.z;
    }
    for (const auto& row : rows) {
      worst = std::max(worst, row.constraint.offset - dot(row.constraint.normal, exp.state.positions[row.uav]));
    }
    r.start(vIdx) = worst + 1.0;
    const BackendResult rec = backend_solve(r, config.subproblemTol);
    step.losRelaxed = true;
    step.losRelaxation = std::max(rec.x(vIdx), 0.0) + 1e-3;
    result = solve_main(step.losRelaxation);
  }
  step.positions = unpack_positions(result.x, M);
  step.objective = min_over_served(surrogate.values(step.positions), exp.served);
  step.certificate = result.certificate;
  return step;
}

PowerAssocStep solve_power_assoc(const ExpansionPoint& exp, const PowerAssocSurrogate& surrogate,
                                 const PlacementProblem& problem, const SolverConfig& config) {
  const std::size_t K = exp.user_count();
  const std::size_t M = exp.uav_count();
  const PowerAssocLayout& L = surrogate.layout;
  const Eigen::VectorXd ref = L.pack(surrogate.powerRef, surrogate.assocRef);

  PowerAssocStep step;
  step.power = surrogate.powerRef;
  step.assoc = surrogate.assocRef;
  {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      for (const auto& piece : surrogate.pieces[k]) worst = std::min(worst, piece.value(ref));
    }
    step.objectiveAtReference = (std::isfinite(worst) ? worst : 0.0) + surrogate.penaltyLb.value(ref);
    step.objective = step.objectiveAtReference;
  }
  if (L.size == 0) return step;

  const std::size_t tIdx = L.size;
  ConvexSubproblem p;
  p.variableCount = L.size + 1;
  p.objective = surrogate.penaltyLb;
  p.objective.add_linear(tIdx, 1.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& piece : surrogate.pieces[k]) {
      ConcaveFunction f = piece;
      f.add_linear(tIdx, -1.0);
      p.add_constraint(std::move(f), "rate");
    }
  }

  Eigen::VectorXd start = ref;
  start.conservativeResize(L.size + 1);
  const PowerAllocation& pt = surrogate.powerRef;
  for (std::size_t m = 0; m < M; ++m) {
    ConcaveFunction budget;
    budget.add_constant(problem.pMax);
    std::vector<std::ptrdiff_t> vars;
    if (L.commonVar[m] >= 0) {
      vars.push_back(L.commonVar[m]);
    } else {
      budget.add_constant(-pt.common(m));
    }
    for (std::size_t k = 0; k < K; ++k) {
      const std::ptrdiff_t v = L.privateVar[k * M + m];
      if (v >= 0) {
        vars.push_back(v);
      } else if (exp.served.servingUav[k] == m) {
        budget.add_constant(-pt.privatePower(k, m));
      }
    }
    if (vars.empty()) continue;
    const double fresh = problem.pMax / static_cast<double>(vars.size() + 1);
    for (std::ptrdiff_t v : vars) {
      budget.add_linear(v, -1.0);
      ConcaveFunction nonneg;
      nonneg.add_linear(v, 1.0);
      p.add_constraint(std::move(nonneg), "power-nonnegative");
      start(v) = 0.5 * start(v) + 0.5 * fresh;
    }
    p.add_constraint(std::move(budget), "power-budget");
  }

  const bool assocFree = std::any_of(L.assocVar.begin(), L.assocVar.end(), [](auto v) { return v >= 0; });
  if (assocFree) {
    const auto& cap = surrogate.assocRef.capacity;
    const double capTotal = std::accumulate(cap.begin(), cap.end(), 0.0);
    const bool tight = capTotal == static_cast<double>(K);
    std::vector<std::pair<Eigen::VectorXd, double>> equalities;
    for (std::size_t k = 0; k < K; ++k) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(p.variableCount);
      for (std::size_t m = 0; m < M; ++m) {
        const std::ptrdiff_t v = L.assocVar[k * M + m];
        // c <= 1 follows from the unit rows; stating it would put a slack of
        // 1 - c near zero, which double precision cannot resolve.
        ConcaveFunction nonneg;
        nonneg.add_linear(v, 1.0);
        p.add_constraint(std::move(nonneg), "association-box");
        row(v) = 1.0;
        start(v) = 0.5 * start(v) + 0.5 * cap[m] / capTotal;
      }
      equalities.emplace_back(row, 1.0);
    }
    for (std::size_t m = 0; m < M; ++m) {
      if (tight) {
        // With every capacity tight one column equation is implied by the rows.
        if (m + 1 == M) break;
        Eigen::VectorXd col = Eigen::VectorXd::Zero(p.variableCount);
        for (std::size_t k = 0; k < K; ++k) col(L.assocVar[k * M + m]) = 1.0;
        equalities.emplace_back(col, static_cast<double>(cap[m]));
      } else {
        ConcaveFunction f;
        f.add_constant(static_cast<double>(cap[m]));
        for (std::size_t k = 0; k < K; ++k) f.add_linear(L.assocVar[k * M + m], -1.0);
        p.add_constraint(std::move(f), "capacity");
      }
    }
    p.equalityMatrix.resize(static_cast<Eigen::Index>(equalities.size()), p.variableCount);
    p.equalityRhs.resize(static_cast<Eigen::Index>(equalities.size()));
    for (std::size_t i = 0; i < equalities.size(); ++i) {
      p.equalityMatrix.row(i) = equalities[i].first.transpose();
      p.equalityRhs(i) = equalities[i].second;
    }
  }

  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& piece : surrogate.pieces[k]) worst = std::min(worst, piece.value(start));
  }
  start(tIdx) = (std::isfinite(worst) ? worst : 0.0) - 1.0;
  p.start = start;

  const BackendResult result = backend_solve(p, config.subproblemTol);
  const Eigen::VectorXd v = result.x.head(L.size);
  L.unpack(v, step.power, step.assoc);
  step.assoc.values = step.assoc.values.cwiseMax(0.0).cwiseMin(1.0);
  step.power.common = step.power.common.cwiseMax(0.0);
  step.power.privatePower = step.power.privatePower.cwiseMax(0.0);
  step.objective = result.objective;
  step.certificate = result.certificate;
  return step;
}

Eigen::MatrixXd apply_rounding_thresholds(const Eigen::MatrixXd& C, double low, double high) {
  return C.unaryExpr([&](double c) { return c <= low ? 0.0 : (c >= high ? 1.0 : c); });
}

Association round_association(const Association& fractional, const SolverConfig& config) {
  const Eigen::MatrixXd C = apply_rounding_thresholds(fractional.values, config.roundLow, config.roundHigh);
  const std::size_t K = C.rows();
  const std::size_t M = C.cols();
  Association out{Eigen::MatrixXd::Zero(K, M), fractional.capacity};
  std::vector<int> load(M, 0);

  auto settle = [&](std::vector<std::size_t> users) {
    std::vector<std::size_t> pending;
    for (std::size_t k : users) {
      std::vector<std::size_t> uavs(M);
      std::iota(uavs.begin(), uavs.end(), 0);
      std::stable_sort(uavs.begin(), uavs.end(), [&](std::size_t a, std::size_t b) { return C(k, a) > C(k, b); });
      bool placed = false;
      for (std::size_t m : uavs) {
        if (load[m] < out.capacity[m]) {
          out.values(k, m) = 1.0;
          ++load[m];
          placed = true;
          break;
        }
      }
      if (!placed) throw Error(ErrorCode::InvalidArgument, "capacities cannot host every user");
    }
  };

  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return C.row(a).maxCoeff() > C.row(b).maxCoeff(); });
  // Rows already holding a 1 keep it while capacity lasts.
  std::vector<std::size_t> rest;
  for (std::size_t k : order) {
    Eigen::Index m;
    const double best = C.row(k).maxCoeff(&m);
    if (best == 1.0 && load[m] < out.capacity[m]) {
      out.values(k, m) = 1.0;
      ++load[m];
    } else {
      rest.push_back(k);
    }
  }
  settle(rest);
  return out;
}

MultiplierUpdate update_multipliers(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& C, double mu) {
  const Eigen::ArrayXXd gap = C.array() * (1.0 - C.array());
  const double S = gap.square().sum();
  MultiplierUpdate out{lambda, 2.0 * mu};
  if (S >= 1e-18) out.lambda = (lambda.array() + (mu / S) * gap).matrix();
  return out;
}

PowerAllocation reconcile_power(const PowerAllocation& power, const Association& previous,
                                const Association& current, double pMax, bool commonStream) {
  PowerAllocation out = power;
  const std::size_t K = current.values.rows();
  const std::size_t M = current.values.cols();
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<std::size_t> retained;
    std::vector<std::size_t> joined;
    for (std::size_t k = 0; k < K; ++k) {
      if (current.values(k, m) != 1.0) {
        out.privatePower(k, m) = 0.0;
      } else if (previous.values(k, m) == 1.0) {
        retained.push_back(k);
      } else {
        joined.push_back(k);
      }
    }
    if (!commonStream) out.common(m) = 0.0;
    double share = pMax / static_cast<double>(retained.size() + joined.size() + 1);
    if (!retained.empty()) {
      share = 0.0;
      for (std::size_t k : retained) share += out.privatePower(k, m);
      share /= static_cast<double>(retained.size());
    }
    for (std::size_t k : joined) out.privatePower(k, m) = share;
    const double total = out.common(m) + out.privatePower.col(m).sum();
    if (total > pMax) {
      out.common(m) *= pMax / total;
      out.privatePower.col(m) *= pMax / total;
    }
  }
  return out;
}

PowerAllocation equal_power_split(const Association& assoc, double pMax, bool commonStream) {
  const std::size_t K = assoc.values.rows();
  const std::size_t M = assoc.values.cols();
  PowerAllocation out = PowerAllocation::zeros(K, M);
  for (std::size_t m = 0; m < M; ++m) {
    const double served = (assoc.values.col(m).array() == 1.0).count();
    const double streams = commonStream ? served + 1.0 : served;
    if (streams == 0.0) continue;
    const double share = pMax / streams;
    if (commonStream) out.common(m) = share;
    for (std::size_t k = 0; k < K; ++k) {
      if (assoc.values(k, m) == 1.0) out.privatePower(k, m) = share;
    }
  }
  return out;
}

RateBreakdown evaluate_state(const NetworkState& state, const PlacementProblem& problem, bool commonStream,
                             bool assumeLos) {
  const LinkTable links = evaluate_links(problem.env, state.positions, problem.propagation, assumeLos);
  if (commonStream) return compute_rates(state, links.gains, problem.propagation.noisePower);
  return compute_rates_noma(state, links.gains, problem.propagation.noisePower);
}

std::size_t count_los_violations(const NetworkState& state, const Environment& env) {
  std::size_t count = 0;
  for (std::size_t k = 0; k < state.user_count(); ++k) {
    for (std::size_t m = 0; m < state.uav_count(); ++m) {
      if (state.assoc.values(k, m) == 1.0 && !env.is_los(k, state.positions[m])) ++count;
    }
  }
  return count;
}

BcdResult run_bcd(const PlacementProblem& problem, const NetworkState& init, const SolverConfig& config,
                  const RunOptions& options) {
  config.validate();
  const SchemeFlags flags = scheme_flags(options.scheme);
  const ExpansionOptions expOptions{flags.assumeLos, flags.commonStream};
  const auto begin = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    if (!options.recordTiming) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - begin).count();
  };

  BcdResult out;
  NetworkState state = init;
  if (!flags.commonStream) state.power = equal_power_split(state.assoc, problem.pMax, false);
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Constant(state.user_count(), state.uav_count(), config.lambda0);
  double mu = config.mu0;
  double zeta = config.zeta0;

  auto record = [&](int iter, double surrogateObjective, double penalty) {
    IterationTrace row;
    row.iter = iter;
    row.minRate = evaluate_state(state, problem, flags.commonStream).minRate;
    row.surrogateObjective = surrogateObjective;
    row.penaltyValue = penalty;
    row.maxIntegralityGap = state.assoc.max_integrality_gap();
    row.zeta = zeta;
    row.losViolations = count_los_violations(state, problem.env);
    row.wallMs = elapsed_ms();
    out.trace.push_back(row);
    if (options.onIteration) options.onIteration(row);
  };

  record(0, evaluate_state(state, problem, flags.commonStream, flags.assumeLos).minRate, 0.0);

  for (int t = 1; t <= config.tMax; ++t) {
    try {
      const ExpansionPoint exp = build_expansion(state, problem.env, problem.propagation, lambda, expOptions);
      NetworkState next = state;
      if (flags.optimizePosition) {
        const PositionSurrogate surrogate = position_surrogate(exp);
        const PositionStep step = solve_position(exp, surrogate, problem, config, zeta, !flags.assumeLos);
        out.worstAscentViolation =
            std::max(out.worstAscentViolation, step.objectiveAtReference - step.objective);
        if (step.losRelaxed) ++out.losRecoveries;
        next.positions = step.positions;
      }

      const ExpansionPoint expNext =
          build_expansion(next, problem.env, problem.propagation, lambda, expOptions);
      const PowerAssocSurrogate surrogate =
          power_assoc_surrogate(expNext, {flags.optimizePower, true});
      const PowerAssocStep step = solve_power_assoc(expNext, surrogate, problem, config);
      out.worstAscentViolation = std::max(out.worstAscentViolation, step.objectiveAtReference - step.objective);

      const double penalty = penalty_terms(lambda, step.assoc.values, state.assoc.values).rho;
      const MultiplierUpdate update = update_multipliers(
          lambda, apply_rounding_thresholds(step.assoc.values, config.roundLow, config.roundHigh), mu);
      const Association rounded = round_association(step.assoc, config);
      next.power = flags.optimizePower
                       ? reconcile_power(step.power, state.assoc, rounded, problem.pMax, flags.commonStream)
                       : equal_power_split(rounded, problem.pMax, flags.commonStream);
      next.assoc = rounded;
      state = std::move(next);
      lambda = update.lambda;
      mu = update.mu;
      record(t, step.objective, penalty);
      zeta *= config.eta;
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "iteration " << t << ": " << e.what();
      throw Error(e.code(), msg.str());
    }
  }

  out.state = state;
  out.rates = evaluate_state(state, problem, flags.commonStream);
  out.assumedMinRate = evaluate_state(state, problem, flags.commonStream, flags.assumeLos).minRate;
  out.lambda = lambda;
  return out;
}

}  // namespace rsmaplace
