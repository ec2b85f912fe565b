#include "rsmaplace/convex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "rsmaplace/error.hpp"

namespace rsmaplace {

namespace {

constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

double log_argument(const LogTerm& t, const Eigen::VectorXd& x) {
  double a = t.constant;
  for (const auto& [i, c] : t.coeffs) a += c * x(i);
  return a;
}

}  // namespace

bool ConcaveFunction::is_concave() const {
  return std::all_of(quadratics.begin(), quadratics.end(), [](const auto& q) { return q.weight >= 0.0; }) &&
         std::all_of(logs.begin(), logs.end(), [](const auto& l) { return l.weight >= 0.0; });
}

bool ConcaveFunction::in_domain(const Eigen::VectorXd& x) const {
  return std::all_of(logs.begin(), logs.end(), [&](const LogTerm& t) { return log_argument(t, x) > 0.0; });
}

double ConcaveFunction::value(const Eigen::VectorXd& x) const {
  double v = constant;
  for (const auto& [i, c] : linear) v += c * x(i);
  for (const auto& q : quadratics) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.index.size(); ++j) {
      const double d = x(q.index[j]) - q.center[j];
      s += d * d;
    }
    v -= q.weight * s;
  }
  for (const auto& t : logs) v += t.weight * std::log2(log_argument(t, x));
  return v;
}

void ConcaveFunction::add_gradient(const Eigen::VectorXd& x, double scale, Eigen::VectorXd& grad) const {
  for (const auto& [i, c] : linear) grad(i) += scale * c;
  for (const auto& q : quadratics) {
    for (std::size_t j = 0; j < q.index.size(); ++j) {
      grad(q.index[j]) -= scale * 2.0 * q.weight * (x(q.index[j]) - q.center[j]);
    }
  }
  for (const auto& t : logs) {
    const double f = scale * t.weight * kInvLn2 / log_argument(t, x);
    for (const auto& [i, c] : t.coeffs) grad(i) += f * c;
  }
}

void ConcaveFunction::add_hessian(const Eigen::VectorXd& x, double scale, Eigen::MatrixXd& hess) const {
  for (const auto& q : quadratics) {
    for (std::size_t i : q.index) hess(i, i) -= scale * 2.0 * q.weight;
  }
  for (const auto& t : logs) {
    const double a = log_argument(t, x);
    const double f = -scale * t.weight * kInvLn2 / (a * a);
    for (const auto& [i, ci] : t.coeffs) {
      for (const auto& [j, cj] : t.coeffs) hess(i, j) += f * ci * cj;
    }
  }
}

void ConvexSubproblem::add_bounds(std::size_t i, double lo, double hi, const std::string& family) {
  ConcaveFunction lower;
  lower.add_constant(-lo).add_linear(i, 1.0);
  add_constraint(std::move(lower), family);
  ConcaveFunction upper;
  upper.add_constant(hi).add_linear(i, -1.0);
  add_constraint(std::move(upper), family);
}

namespace {

std::vector<std::size_t> support_of(const ConcaveFunction& f) {
  std::vector<std::size_t> s;
  for (const auto& [i, c] : f.linear) s.push_back(i);
  for (const auto& q : f.quadratics) s.insert(s.end(), q.index.begin(), q.index.end());
  for (const auto& t : f.logs) {
    for (const auto& [i, c] : t.coeffs) s.push_back(i);
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

/// Barrier problem data shared by phase one and phase two.
struct BarrierModel {
  std::size_t n{0};
  const ConcaveFunction* objective{nullptr};
  std::vector<const ConcaveFunction*> constraints;
  std::vector<std::vector<std::size_t>> supports;
  Eigen::MatrixXd equality;  // rows of A; Newton steps keep A dx = 0

  bool strictly_feasible(const Eigen::VectorXd& x) const {
    if (!objective->in_domain(x)) return false;
    for (const auto* g : constraints) {
      if (!g->in_domain(x) || !(g->value(x) > 0.0)) return false;
    }
    return true;
  }

  double barrier_value(const Eigen::VectorXd& x, double tau) const {
    double v = -tau * objective->value(x);
    for (const auto* g : constraints) v -= std::log(g->value(x));
    return v;
  }
};

struct BarrierOutcome {
  Eigen::VectorXd x;
  double tau{1.0};
  bool stoppedEarly{false};
};

class NewtonBudget {
 public:
  explicit NewtonBudget(int limit) : limit_(limit) {}
  void consume() {
    if (++used_ > limit_) {
      throw Error(ErrorCode::IterationLimit, "interior point method exceeded its Newton step budget");
    }
  }
  int used() const { return used_; }

 private:
  int limit_;
  int used_{0};
};

/// Solves H X = B with symmetric Jacobi scaling, so that barrier-dominated
/// diagonals do not swamp the factorization; regularizes if H is singular.
Eigen::MatrixXd solve_scaled(const Eigen::MatrixXd& hess, const Eigen::MatrixXd& rhs) {
  Eigen::VectorXd d = hess.diagonal().cwiseAbs();
  const double dMax = std::max(d.maxCoeff(), 1e-300);
  d = d.cwiseMax(1e-300 * dMax).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = d.asDiagonal() * hess * d.asDiagonal();
  const Eigen::MatrixXd srhs = d.asDiagonal() * rhs;
  Eigen::LLT<Eigen::MatrixXd> llt(scaled);
  if (llt.info() == Eigen::Success) return d.asDiagonal() * llt.solve(srhs);
  for (double reg = 1e-12; reg < 1.0; reg *= 100.0) {
    Eigen::MatrixXd shifted = scaled;
    shifted.diagonal().array() += reg;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return d.asDiagonal() * llt.solve(srhs);
  }
  throw Error(ErrorCode::BackendFailure, "Newton system is not positive definite");
}

/// Newton step of the equality-constrained barrier problem through the
/// Schur complement A H^-1 A^T.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& hess, const Eigen::VectorXd& grad,
                                 const Eigen::MatrixXd& A) {
  if (A.rows() == 0) return solve_scaled(hess, -grad);
  Eigen::MatrixXd rhs(grad.size(), A.rows() + 1);
  rhs.col(0) = grad;
  rhs.rightCols(A.rows()) = A.transpose();
  const Eigen::MatrixXd sol = solve_scaled(hess, rhs);
  const Eigen::MatrixXd schur = A * sol.rightCols(A.rows());
  const Eigen::VectorXd nu = schur.completeOrthogonalDecomposition().solve(-A * sol.col(0));
  return -(sol.col(0) + sol.rightCols(A.rows()) * nu);
}

/// Centers x for barrier parameter tau. Returns true if earlyStop fired.
bool center(const BarrierModel& model, Eigen::VectorXd& x, double tau, NewtonBudget& budget,
            const std::function<bool(const Eigen::VectorXd&)>& earlyStop) {
  const std::size_t n = model.n;
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd local(n);
  for (int iter = 0; iter < 200; ++iter) {
    grad.setZero();
    hess.setZero();
    model.objective->add_gradient(x, -tau, grad);
    model.objective->add_hessian(x, -tau, hess);
    for (std::size_t c = 0; c < model.constraints.size(); ++c) {
      const ConcaveFunction& g = *model.constraints[c];
      const auto& sup = model.supports[c];
      const double gv = g.value(x);
      for (std::size_t i : sup) local(i) = 0.0;
      g.add_gradient(x, 1.0, local);
      for (std::size_t i : sup) grad(i) -= local(i) / gv;
      const double inv2 = 1.0 / (gv * gv);
      for (std::size_t i : sup) {
        for (std::size_t j : sup) hess(i, j) += local(i) * local(j) * inv2;
      }
      g.add_hessian(x, -1.0 / gv, hess);
    }

    const Eigen::VectorXd dx = newton_direction(hess, grad, model.equality);
    const double slope = grad.dot(dx);
    const double decrement2 = -slope;
    const double phi0 = model.barrier_value(x, tau);
    // Below this the predicted decrease is lost in the barrier's round-off.
    if (decrement2 <= std::max(2e-12, 1e-13 * std::abs(phi0))) return false;

    budget.consume();
    double step = 1.0;
    int halvings = 0;
    while (!model.strictly_feasible(x + step * dx)) {
      step *= 0.5;
      if (++halvings > 80) throw Error(ErrorCode::BackendFailure, "line search lost feasibility");
    }
    while (model.barrier_value(x + step * dx, tau) > phi0 + 0.25 * step * slope) {
      step *= 0.5;
      if (++halvings > 80) break;
    }
    if (halvings > 80) {
      // Round-off dominates the sufficient-decrease test near the center.
      if (decrement2 < 1e-6) return false;
      throw Error(ErrorCode::BackendFailure, "line search failed to decrease the barrier");
    }
    const Eigen::VectorXd trial = x + step * dx;
    if (decrement2 < 1e-6 && !(model.barrier_value(trial, tau) < phi0)) return false;
    x = trial;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e12) {
      throw Error(ErrorCode::Unbounded, "iterates diverged; objective appears unbounded");
    }
    if (earlyStop && earlyStop(x)) return true;
  }
  throw Error(ErrorCode::IterationLimit, "centering did not converge");
}

BarrierOutcome barrier_method(const BarrierModel& model, Eigen::VectorXd x, double tol,
                              NewtonBudget& budget,
                              const std::function<bool(const Eigen::VectorXd&)>& earlyStop = {}) {
  const double m = static_cast<double>(model.constraints.size());
  double tau = 1.0;
  constexpr double kGrowth = 10.0;
  if (m == 0.0) {
    center(model, x, tau, budget, earlyStop);
    return {x, tau, false};
  }
  for (;;) {
    if (center(model, x, tau, budget, earlyStop)) return {x, tau, true};
    if (m / tau <= tol) return {x, tau, false};
    tau = std::min(tau * kGrowth, std::max(m / tol, tau));
  }
}

}  // namespace

BackendResult backend_solve(const ConvexSubproblem& problem, double tol) {
  const std::size_t n = problem.variableCount;
  if (problem.start.size() != static_cast<Eigen::Index>(n)) {
    throw Error(ErrorCode::BackendFailure, "start point has the wrong dimension");
  }
  if (!problem.objective.is_concave()) throw Error(ErrorCode::BackendFailure, "objective is not concave");
  for (const auto& g : problem.constraints) {
    if (!g.is_concave()) throw Error(ErrorCode::BackendFailure, "constraint is not concave");
  }

  Eigen::VectorXd x = problem.start;
  const bool hasEq = problem.equalityMatrix.rows() > 0;
  if (hasEq) {
    const Eigen::VectorXd r = problem.equalityRhs - problem.equalityMatrix * x;
    if (r.cwiseAbs().maxCoeff() > 1e-12) {
      x += problem.equalityMatrix.completeOrthogonalDecomposition().solve(r);
    }
    const Eigen::VectorXd res = problem.equalityRhs - problem.equalityMatrix * x;
    if (res.cwiseAbs().maxCoeff() > 1e-8) {
      throw Error(ErrorCode::SubproblemInfeasible, "equality constraints are inconsistent");
    }
  }
  NewtonBudget budget(4000);
  Certificate cert;

  // Phase one: maximize -s subject to g_i(x) + s >= 0 and s >= -1.
  bool feasible = problem.objective.in_domain(x);
  double minSlack = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const auto& g = problem.constraints[i];
    if (!g.in_domain(x)) {
      throw Error(ErrorCode::BackendFailure, "start point is outside the log-term domain");
    }
    const double v = g.value(x);
    if (v < minSlack) {
      minSlack = v;
      worst = i;
    }
  }
  feasible = feasible && !(minSlack <= 0.0);
  if (!feasible) {
    cert.usedPhaseOne = true;
    const std::size_t s = n;
    std::vector<ConcaveFunction> lifted = problem.constraints;
    for (auto& g : lifted) g.add_linear(s, 1.0);
    ConcaveFunction floor;
    floor.add_constant(1.0).add_linear(s, 1.0);
    lifted.push_back(floor);
    // Keeps directions the objective penalizes (e.g. an epigraph variable)
    // from running off while only feasibility is sought.
    const double f0 = problem.objective.value(x);
    ConcaveFunction objectiveFloor = problem.objective;
    objectiveFloor.add_constant(-f0 + 1e3 * (1.0 + std::abs(f0)));
    lifted.push_back(objectiveFloor);
    ConcaveFunction phaseObjective;
    phaseObjective.add_linear(s, -1.0);

    BarrierModel model;
    model.n = n + 1;
    model.objective = &phaseObjective;
    for (const auto& g : lifted) {
      model.constraints.push_back(&g);
      model.supports.push_back(support_of(g));
    }
    model.equality = Eigen::MatrixXd::Zero(problem.equalityMatrix.rows(), n + 1);
    model.equality.leftCols(n) = problem.equalityMatrix;

    Eigen::VectorXd xs(n + 1);
    xs.head(n) = x;
    xs(s) = std::max(0.0, -minSlack) + 1.0;
    // Stopping at the first s < 0 would leave x on a constraint boundary.
    const auto outcome = barrier_method(model, xs, std::min(tol, 1e-8), budget,
                                        [s](const Eigen::VectorXd& v) { return v(s) < -1e-6; });
    if (!outcome.stoppedEarly && !(outcome.x(s) < 0.0)) {
      minSlack = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
        const double v = problem.constraints[i].value(outcome.x.head(n));
        if (v < minSlack) {
          minSlack = v;
          worst = i;
        }
      }
      std::ostringstream msg;
      msg << "no strictly feasible point; most violated family '" << problem.constraintFamily[worst]
          << "' (constraint " << worst << ", slack " << minSlack << ")";
      throw Error(ErrorCode::SubproblemInfeasible, msg.str());
    }
    x = outcome.x.head(n);
  }

  BarrierModel model;
  model.n = n;
  model.objective = &problem.objective;
  for (const auto& g : problem.constraints) {
    model.constraints.push_back(&g);
    model.supports.push_back(support_of(g));
  }
  model.equality = problem.equalityMatrix;
  const auto outcome = barrier_method(model, x, tol, budget);

  BackendResult result;
  result.x = outcome.x;
  result.objective = problem.objective.value(outcome.x);
  cert.dualityGap = static_cast<double>(problem.constraints.size()) / outcome.tau;
  cert.newtonSteps = budget.used();
  result.certificate = cert;
  return result;
}

}  // namespace rsmaplace
