#include "rsmaplace/rsma_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rsmaplace/error.hpp"

namespace rsmaplace {

namespace {

constexpr double kBinaryLow = 0.001;
constexpr double kBinaryHigh = 0.999;

}  // namespace

bool Association::is_binary() const {
  return (values.array() == 0.0 || values.array() == 1.0).all();
}

double Association::max_integrality_gap() const {
  if (values.size() == 0) return 0.0;
  return (values.array() * (1.0 - values.array())).maxCoeff();
}

LinkTable evaluate_links(const Environment& env, const std::vector<Point3>& positions,
                         const PropagationParams& params, bool assumeLos) {
  const std::size_t K = env.user_count();
  const std::size_t M = positions.size();
  std::vector<LinkState> states(K * M, LinkState::LoS);
  if (!assumeLos) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t m = 0; m < M; ++m) {
        states[k * M + m] = link_state(env.blockage()[k], positions[m]);
      }
    }
  }
  return evaluate_links_frozen(env.users(), positions, states, params);
}

LinkTable evaluate_links_frozen(const std::vector<Point3>& users, const std::vector<Point3>& positions,
                                const std::vector<LinkState>& states, const PropagationParams& params) {
  const std::size_t K = users.size();
  const std::size_t M = positions.size();
  LinkTable table{Eigen::MatrixXd(K, M), states};
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t m = 0; m < M; ++m) {
      table.gains(k, m) = channel_gain(users[k], positions[m], states[k * M + m], params);
    }
  }
  return table;
}

ServedSets served_sets_and_order(const Association& assoc, const Eigen::MatrixXd& gains) {
  const std::size_t K = assoc.values.rows();
  const std::size_t M = assoc.values.cols();
  ServedSets s;
  s.order.assign(M, {});
  s.servingUav.assign(K, kNoUav);
  s.rank.assign(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t m = 0; m < M; ++m) {
      const double c = assoc.values(k, m);
      if (c > kBinaryLow && c < kBinaryHigh) {
        std::ostringstream msg;
        msg << "c(" << k << "," << m << ") = " << c;
        throw Error(ErrorCode::NonBinaryAssociation, msg.str());
      }
      if (c >= kBinaryHigh) {
        s.order[m].push_back(k);
        s.servingUav[k] = m;
      }
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    auto& users = s.order[m];
    std::stable_sort(users.begin(), users.end(), [&](std::size_t a, std::size_t b) {
      if (gains(a, m) != gains(b, m)) return gains(a, m) > gains(b, m);
      return a < b;
    });
    for (std::size_t r = 0; r < users.size(); ++r) s.rank[users[r]] = r;
  }
  return s;
}

double radiated_power(std::size_t m, const NetworkState& state, const ServedSets& served) {
  double total = state.power.common(m);
  for (std::size_t j : served.order[m]) total += state.power.privatePower(j, m);
  return total;
}

double interference_other(std::size_t k, std::size_t m, const NetworkState& state,
                          const Eigen::MatrixXd& gains, const ServedSets& served) {
  double total = 0.0;
  for (std::size_t mp = 0; mp < state.uav_count(); ++mp) {
    if (mp == m) continue;
    total += radiated_power(mp, state, served) * gains(k, mp);
  }
  return total;
}

double interference_other(std::size_t k, std::size_t m, const NetworkState& state,
                          const Eigen::MatrixXd& gains) {
  return interference_other(k, m, state, gains, served_sets_and_order(state.assoc, gains));
}

double sinr_common(std::size_t k, std::size_t m, const NetworkState& state,
                   const Eigen::MatrixXd& gains, const ServedSets& served, double noisePower) {
  double privateSum = 0.0;
  for (std::size_t j : served.order[m]) privateSum += state.power.privatePower(j, m);
  const double g = gains(k, m);
  return state.power.common(m) * g /
         (privateSum * g + interference_other(k, m, state, gains, served) + noisePower);
}

double sinr_common(std::size_t k, std::size_t m, const NetworkState& state,
                   const Eigen::MatrixXd& gains, double noisePower) {
  return sinr_common(k, m, state, gains, served_sets_and_order(state.assoc, gains), noisePower);
}

double sinr_private(std::size_t k, std::size_t m, const NetworkState& state,
                    const Eigen::MatrixXd& gains, const ServedSets& served, double noisePower) {
  const auto& order = served.order[m];
  // Users decoded after k; a user outside K_m sees all of K_m as residual.
  auto it = std::find(order.begin(), order.end(), k);
  std::size_t first = it == order.end() ? 0 : static_cast<std::size_t>(it - order.begin()) + 1;
  double residual = 0.0;
  for (std::size_t r = first; r < order.size(); ++r) residual += state.power.privatePower(order[r], m);
  const double g = gains(k, m);
  return state.power.privatePower(k, m) * g /
         (residual * g + interference_other(k, m, state, gains, served) + noisePower);
}

double sinr_private(std::size_t k, std::size_t m, const NetworkState& state,
                    const Eigen::MatrixXd& gains, double noisePower) {
  return sinr_private(k, m, state, gains, served_sets_and_order(state.assoc, gains), noisePower);
}

RateBreakdown compute_rates(const NetworkState& state, const Eigen::MatrixXd& gains, double noisePower) {
  const ServedSets served = served_sets_and_order(state.assoc, gains);
  const std::size_t K = state.user_count();
  const std::size_t M = state.uav_count();
  RateBreakdown out{Eigen::VectorXd::Zero(K), Eigen::VectorXd::Zero(K), Eigen::VectorXd::Zero(K), 0.0};
  for (std::size_t m = 0; m < M; ++m) {
    const auto& users = served.order[m];
    if (users.empty()) continue;
    double commonRate = std::numeric_limits<double>::infinity();
    for (std::size_t k : users) {
      commonRate = std::min(commonRate, std::log2(1.0 + sinr_common(k, m, state, gains, served, noisePower)));
    }
    const double share = commonRate / static_cast<double>(users.size());
    for (std::size_t k : users) {
      out.perUserCommon(k) += share;
      out.perUserPrivate(k) += std::log2(1.0 + sinr_private(k, m, state, gains, served, noisePower));
    }
  }
  out.perUserTotal = out.perUserCommon + out.perUserPrivate;
  out.minRate = K == 0 ? 0.0 : out.perUserTotal.minCoeff();
  return out;
}

RateBreakdown compute_rates_noma(const NetworkState& state, const Eigen::MatrixXd& gains,
                                 double noisePower) {
  for (Eigen::Index m = 0; m < state.power.common.size(); ++m) {
    if (state.power.common(m) > 0.0) {
      std::ostringstream msg;
      msg << "UAV " << m << " has common power " << state.power.common(m);
      throw Error(ErrorCode::NonZeroCommonPower, msg.str());
    }
  }
  RateBreakdown out = compute_rates(state, gains, noisePower);
  out.perUserCommon.setZero();
  out.perUserTotal = out.perUserPrivate;
  out.minRate = out.perUserTotal.size() == 0 ? 0.0 : out.perUserTotal.minCoeff();
  return out;
}

DecompositionTerms rate_decomposition(const NetworkState& state, const Eigen::MatrixXd& gains,
                                      double noisePower) {
  return rate_decomposition(state, gains, served_sets_and_order(state.assoc, gains), noisePower);
}

DecompositionTerms rate_decomposition(const NetworkState& state, const Eigen::MatrixXd& gains,
                                      const ServedSets& served, double noisePower) {
  const std::size_t K = state.user_count();
  const std::size_t M = state.uav_count();
  const Eigen::MatrixXd& c = state.assoc.values;
  DecompositionTerms t;
  t.pTotal = Eigen::VectorXd::Zero(K);
  t.iOther = Eigen::MatrixXd::Zero(K, M);
  t.rHat = Eigen::MatrixXd::Zero(K, M);
  t.rHatP = Eigen::MatrixXd::Zero(K, M);
  t.rBarC = Eigen::MatrixXd::Zero(K, M);
  t.rBarP = Eigen::MatrixXd::Zero(K, M);
  t.weakest.assign(M, kNoUav);

  Eigen::VectorXd radiated(M);
  Eigen::VectorXd privateSum(M);
  for (std::size_t m = 0; m < M; ++m) {
    radiated(m) = radiated_power(m, state, served) / noisePower;
    privateSum(m) = (radiated_power(m, state, served) - state.power.common(m)) / noisePower;
    const auto& users = served.order[m];
    for (std::size_t k : users) {
      const std::size_t w = t.weakest[m];
      if (w == kNoUav || gains(k, m) < gains(w, m) || (gains(k, m) == gains(w, m) && k < w)) {
        t.weakest[m] = k;
      }
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    t.pTotal(k) = radiated.dot(gains.row(k).transpose());
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t mp = 0; mp < M; ++mp) {
        if (mp != m) t.iOther(k, m) += radiated(mp) * gains(k, mp);
      }
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    const auto& users = served.order[m];
    const std::size_t w = t.weakest[m];
    for (std::size_t k = 0; k < K; ++k) {
      t.rHat(k, m) = c(k, m) * std::log2(1.0 + t.pTotal(k));
      if (w != kNoUav) {
        t.rBarC(k, m) = c(k, m) * std::log2(1.0 + privateSum(m) * gains(w, m) + t.iOther(w, m));
      }
      double residual = 0.0;
      if (served.servingUav[k] == m) {
        for (std::size_t r = served.rank[k] + 1; r < users.size(); ++r) {
          residual += state.power.privatePower(users[r], m);
        }
      } else {
        residual = privateSum(m) * noisePower;
      }
      t.rBarP(k, m) = c(k, m) * std::log2(1.0 + residual / noisePower * gains(k, m) + t.iOther(k, m));
      const double own = served.servingUav[k] == m ? state.power.privatePower(k, m) : 0.0;
      t.rHatP(k, m) = c(k, m) * std::log2(1.0 + (own + residual) / noisePower * gains(k, m) + t.iOther(k, m));
    }
  }
  return t;
}

}  // namespace rsmaplace
