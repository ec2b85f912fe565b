#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace rsmaplace {

using SparseCoeffs = std::vector<std::pair<std::size_t, double>>;

/// -weight * sum_i (x[index_i] - center_i)^2 with weight >= 0.
struct QuadraticTerm {
  double weight{0.0};
  std::vector<std::size_t> index;
  std::vector<double> center;
};

/// weight * log2(constant + coeffs . x) with weight >= 0; the argument must
/// stay positive.
struct LogTerm {
  double weight{0.0};
  double constant{1.0};
  SparseCoeffs coeffs;
};

/// Smooth concave function built from affine, concave-quadratic and
/// log-of-affine pieces.
class ConcaveFunction {
 public:
  double constant{0.0};
  SparseCoeffs linear;
  std::vector<QuadraticTerm> quadratics;
  std::vector<LogTerm> logs;

  ConcaveFunction& add_constant(double c) {
    constant += c;
    return *this;
  }
  ConcaveFunction& add_linear(std::size_t i, double coef) {
    linear.emplace_back(i, coef);
    return *this;
  }

  bool is_concave() const;
  bool in_domain(const Eigen::VectorXd& x) const;
  double value(const Eigen::VectorXd& x) const;
  /// grad += scale * gradient(x)
  void add_gradient(const Eigen::VectorXd& x, double scale, Eigen::VectorXd& grad) const;
  /// hess += scale * hessian(x)
  void add_hessian(const Eigen::VectorXd& x, double scale, Eigen::MatrixXd& hess) const;
};

/// maximize objective(x) s.t. constraints[i](x) >= 0, A x = b.
struct ConvexSubproblem {
  std::size_t variableCount{0};
  ConcaveFunction objective;
  std::vector<ConcaveFunction> constraints;
  std::vector<std::string> constraintFamily;
  Eigen::MatrixXd equalityMatrix;
  Eigen::VectorXd equalityRhs;
  /// Initial point; must lie in the domain of every log term.
  Eigen::VectorXd start;

  std::size_t add_constraint(ConcaveFunction f, std::string family) {
    constraints.push_back(std::move(f));
    constraintFamily.push_back(std::move(family));
    return constraints.size() - 1;
  }
  /// lo <= x_i <= hi as two affine constraints.
  void add_bounds(std::size_t i, double lo, double hi, const std::string& family);
};

struct Certificate {
  /// Upper bound on (optimal value - returned value).
  double dualityGap{0.0};
  int newtonSteps{0};
  bool usedPhaseOne{false};
};

struct BackendResult {
  Eigen::VectorXd x;
  double objective{0.0};
  Certificate certificate;
};

/// Log-barrier interior point method with a phase-one feasibility search.
/// Throws Error with SubproblemInfeasible (message names the most violated
/// constraint family), Unbounded, IterationLimit or BackendFailure.
BackendResult backend_solve(const ConvexSubproblem& problem, double tol);

}  // namespace rsmaplace
