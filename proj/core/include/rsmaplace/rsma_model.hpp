#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <vector>

#include "rsmaplace/channel.hpp"
#include "rsmaplace/geometry.hpp"

namespace rsmaplace {

inline constexpr std::size_t kNoUav = std::numeric_limits<std::size_t>::max();

/// Common power per UAV (M) and private power per (user, UAV) pair (K x M), watts.
struct PowerAllocation {
  Eigen::VectorXd common;
  Eigen::MatrixXd privatePower;

  static PowerAllocation zeros(std::size_t users, std::size_t uavs) {
    return {Eigen::VectorXd::Zero(uavs), Eigen::MatrixXd::Zero(users, uavs)};
  }
};

/// Relaxed or binary user-UAV association (K x M) plus per-UAV capacities.
struct Association {
  Eigen::MatrixXd values;
  std::vector<int> capacity;

  bool is_binary() const;
  /// Largest c (1 - c) over all entries.
  double max_integrality_gap() const;
};

struct NetworkState {
  std::vector<Point3> positions;
  PowerAllocation power;
  Association assoc;

  std::size_t uav_count() const noexcept { return positions.size(); }
  std::size_t user_count() const noexcept { return assoc.values.rows(); }
};

/// Channel gains (K x M) and the link states they were evaluated with.
struct LinkTable {
  Eigen::MatrixXd gains;
  std::vector<LinkState> states;  // row-major K x M

  LinkState state(std::size_t k, std::size_t m) const {
    return states[k * static_cast<std::size_t>(gains.cols()) + m];
  }
};

/// Evaluates every (user, UAV) link. With `assumeLos` every link is treated as LoS.
LinkTable evaluate_links(const Environment& env, const std::vector<Point3>& positions,
                         const PropagationParams& params, bool assumeLos = false);

/// Same gains with caller-fixed link states.
LinkTable evaluate_links_frozen(const std::vector<Point3>& users, const std::vector<Point3>& positions,
                                const std::vector<LinkState>& states, const PropagationParams& params);

/// Served sets K_m in decoding order (decreasing gain, ties by user id).
struct ServedSets {
  std::vector<std::vector<std::size_t>> order;
  std::vector<std::size_t> servingUav;  // kNoUav if the user is not served
  std::vector<std::size_t> rank;        // position in the serving UAV's order

  std::size_t served_count(std::size_t m) const { return order[m].size(); }
};

/// Throws Error(NonBinaryAssociation) if any entry lies in (0.001, 0.999).
ServedSets served_sets_and_order(const Association& assoc, const Eigen::MatrixXd& gains);

/// p_c + sum of private powers to served users, watts.
double radiated_power(std::size_t m, const NetworkState& state, const ServedSets& served);

/// Interference at user k from every UAV other than m, watts.
double interference_other(std::size_t k, std::size_t m, const NetworkState& state,
                          const Eigen::MatrixXd& gains, const ServedSets& served);
double interference_other(std::size_t k, std::size_t m, const NetworkState& state,
                          const Eigen::MatrixXd& gains);

double sinr_common(std::size_t k, std::size_t m, const NetworkState& state,
                   const Eigen::MatrixXd& gains, const ServedSets& served, double noisePower);
double sinr_common(std::size_t k, std::size_t m, const NetworkState& state,
                   const Eigen::MatrixXd& gains, double noisePower);

/// Residual intra-cell interference comes only from users decoded after k.
double sinr_private(std::size_t k, std::size_t m, const NetworkState& state,
                    const Eigen::MatrixXd& gains, const ServedSets& served, double noisePower);
double sinr_private(std::size_t k, std::size_t m, const NetworkState& state,
                    const Eigen::MatrixXd& gains, double noisePower);

/// Per-user rates in bit/s/Hz.
struct RateBreakdown {
  Eigen::VectorXd perUserCommon;
  Eigen::VectorXd perUserPrivate;
  Eigen::VectorXd perUserTotal;
  double minRate{0.0};
};

/// Common rate per UAV is the minimum common rate over its served users,
/// split equally among them; UAVs with no users contribute nothing.
RateBreakdown compute_rates(const NetworkState& state, const Eigen::MatrixXd& gains, double noisePower);

/// Private-only SIC rates. Throws Error(NonZeroCommonPower) if any p_c > 0.
RateBreakdown compute_rates_noma(const NetworkState& state, const Eigen::MatrixXd& gains,
                                 double noisePower);

/// Log-difference form of the rates. All powers are normalized by the noise.
///   rHat(k,m)  = c(k,m) log2(1 + pTotal(k))
///   rBarC(k,m) = c(k,m) log2(1 + sum_{j in K_m} p_j g(k*,m) + iOther(k*,m))
///   rHatP(k,m) = c(k,m) log2(1 + (p_k + sum_{j after k} p_j) g(k,m) + iOther(k,m))
///   rBarP(k,m) = c(k,m) log2(1 + sum_{j after k} p_j g(k,m) + iOther(k,m))
/// so that common(k,m) = c(k,m) rHat(k*,m) - rBarC(k,m) is the common rate as
/// decoded by k* and private(k,m) = rHatP(k,m) - rBarP(k,m).
struct DecompositionTerms {
  Eigen::VectorXd pTotal;  // K
  Eigen::MatrixXd iOther;  // K x M
  Eigen::MatrixXd rHat;
  /// c log2(1 + (p_k + residual) g + I^other): received total left after SIC.
  Eigen::MatrixXd rHatP;
  Eigen::MatrixXd rBarC;
  Eigen::MatrixXd rBarP;
  std::vector<std::size_t> weakest;  // k* per UAV, kNoUav if unused

  double common_rate(std::size_t k, std::size_t m, double c) const {
    return weakest[m] == kNoUav ? 0.0 : c * rHat(weakest[m], m) - rBarC(k, m);
  }
  double private_rate(std::size_t k, std::size_t m) const { return rHatP(k, m) - rBarP(k, m); }
};

/// k* is the served user with the smallest gain, ties going to the smaller id.
DecompositionTerms rate_decomposition(const NetworkState& state, const Eigen::MatrixXd& gains,
                                      double noisePower);
DecompositionTerms rate_decomposition(const NetworkState& state, const Eigen::MatrixXd& gains,
                                      const ServedSets& served, double noisePower);

}  // namespace rsmaplace
