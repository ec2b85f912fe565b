#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "rsmaplace/channel.hpp"
#include "rsmaplace/convex.hpp"
#include "rsmaplace/geometry.hpp"
#include "rsmaplace/rsma_model.hpp"

namespace rsmaplace {

struct ExpansionOptions {
  /// Treat every link as LoS instead of consulting the blocking planes.
  bool assumeLos{false};
  /// false drops the common stream (NOMA): p_c is held at zero and the
  /// common-rate terms vanish from every surrogate.
  bool commonStream{true};
};

/// Frozen iterate (X_t, P_t, C_t) with everything the surrogates need.
/// Per-(k, m) matrices are K x M; theta entries are gated by c_t(k, m).
struct ExpansionPoint {
  NetworkState state;
  std::vector<Point3> users;
  double noisePower{0.0};
  ExpansionOptions options;

  std::vector<LinkState> linkStates;  // row-major K x M
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd gains;
  Eigen::MatrixXd dist2;  // ||x_m - u_k||^2 at X_t
  Eigen::MatrixXd phi;
  Eigen::MatrixXd thetaHat;
  Eigen::MatrixXd thetaHatP;  // served k, received total left after SIC
  Eigen::MatrixXd thetaC;  // theta^c of served user k as a decoder of m's common stream
  Eigen::MatrixXd thetaP;
  Eigen::MatrixXd thetaCPrime;
  Eigen::MatrixXd thetaPPrime;
  ServedSets served;
  std::vector<std::size_t> weakest;
  Eigen::MatrixXd lambda;

  /// Frozen-state rates at the expansion point.
  Eigen::VectorXd rates;

  std::size_t user_count() const { return users.size(); }
  std::size_t uav_count() const { return state.positions.size(); }
};

/// Requires a binary association. Throws Error(ZeroDistance) if a UAV sits on a user.
ExpansionPoint build_expansion(const NetworkState& state, const Environment& env,
                               const PropagationParams& params, const Eigen::MatrixXd& lambda,
                               const ExpansionOptions& options = {});

/// Per-user rates with the expansion's link states, served sets, decoding
/// order held fixed, for arbitrary positions and powers. The common rate of
/// each UAV is the minimum over its served users, as in the true model.
Eigen::VectorXd frozen_rates(const ExpansionPoint& exp, const std::vector<Point3>& positions,
                             const PowerAllocation& power);

/// weight * (y0 - ||x_uav - anchor||^2), or its tangent in x when linearized.
struct DistanceTerm {
  std::size_t uav{0};
  Point3 anchor;
  double weight{0.0};
  double y0{0.0};
  Point3 reference;
  bool linearized{false};

  double value(const Point3& x) const;
  Point3 gradient(const Point3& x) const;
};

struct UserRateModel {
  double constant{0.0};
  std::vector<DistanceTerm> terms;

  double value(const std::vector<Point3>& X) const;
  std::vector<Point3> gradient(const std::vector<Point3>& X) const;
  /// Coefficient multiplying ||x_uav||^2 (<= 0 once concavified).
  double quadratic_coefficient(std::size_t uav) const;
};

/// Concave model of each user's rate in the UAV positions. User k gets one
/// piece per served user j of its UAV (private rate of k plus the common rate
/// as decoded by j); the rate model is the minimum over the pieces.
struct PositionSurrogate {
  std::vector<std::vector<UserRateModel>> pieces;

  Eigen::VectorXd values(const std::vector<Point3>& X) const;
};

/// Builds R_k^dep and linearizes every distance term whose net coefficient
/// would make it convex in x.
PositionSurrogate position_surrogate(const ExpansionPoint& exp);

/// Variable indices of the power/association block; -1 marks a fixed entry.
struct PowerAssocLayout {
  std::vector<std::ptrdiff_t> commonVar;   // M
  std::vector<std::ptrdiff_t> privateVar;  // K x M row-major
  std::vector<std::ptrdiff_t> assocVar;    // K x M row-major
  std::size_t size{0};

  Eigen::VectorXd pack(const PowerAllocation& p, const Association& c) const;
  void unpack(const Eigen::VectorXd& v, PowerAllocation& p, Association& c) const;
};

struct PowerAssocOptions {
  bool optimizePower{true};
  bool optimizeAssociation{true};
};

/// Linear-in-C minorant of the penalty: rhoLb(C) = constant + sum slope(k,m) c(k,m).
struct PenaltyTerms {
  double rho{0.0};
  double lbConstant{0.0};
  Eigen::MatrixXd lbSlope;

  double lower_bound(const Eigen::MatrixXd& C) const {
    return lbConstant + (lbSlope.array() * C.array()).sum();
  }
};

/// rho(L, C) = -sum L c (1 - c); its tangent minorant at C_t.
/// Throws Error(NegativeMultiplier) on any negative multiplier.
PenaltyTerms penalty_terms(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& C,
                           const Eigen::MatrixXd& Ct);

/// Per-user concave model in (P, C) over the layout's variables, one piece
/// per common-stream decoder as in the position model, plus the penalty
/// minorant as an affine function of the same variables.
struct PowerAssocSurrogate {
  PowerAssocLayout layout;
  std::vector<std::vector<ConcaveFunction>> pieces;
  ConcaveFunction penaltyLb;
  /// Frozen values at (P_t, C_t).
  PowerAllocation powerRef;
  Association assocRef;

  Eigen::VectorXd values(const PowerAllocation& p, const Association& c) const;
};

/// `exp` must be built at X_next (gains and link states re-frozen there) with
/// P_t and C_t. The concave log terms come from rHat; rBarC and rBarP are
/// replaced by their tangent planes at P_t; the association enters through
/// c(k, m) times the rate user k would get from UAV m at P_t.
PowerAssocSurrogate power_assoc_surrogate(const ExpansionPoint& exp, const PowerAssocOptions& options = {});

/// Rate user k would obtain from UAV m at the expansion powers if it were
/// served by m (equals the frozen rate for the actual serving UAV).
double association_rate(const ExpansionPoint& exp, std::size_t k, std::size_t m);

}  // namespace rsmaplace
