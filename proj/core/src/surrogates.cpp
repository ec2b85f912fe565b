#include "rsmaplace/surrogates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "rsmaplace/error.hpp"

namespace rsmaplace {

namespace {

constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

/// Noise-normalized powers under a fixed served-set structure.
struct NormalizedPower {
  Eigen::VectorXd radiated;     // p_c + sum_{j in K_m} p_j
  Eigen::VectorXd privateSum;   // sum_{j in K_m} p_j
  Eigen::MatrixXd privatePower;
  Eigen::VectorXd common;
};

NormalizedPower normalize(const PowerAllocation& power, const ServedSets& served, double noise,
                          bool commonStream) {
  const std::size_t M = served.order.size();
  NormalizedPower out;
  out.privatePower = power.privatePower / noise;
  out.common = commonStream ? Eigen::VectorXd(power.common / noise) : Eigen::VectorXd::Zero(M);
  out.privateSum = Eigen::VectorXd::Zero(M);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t j : served.order[m]) out.privateSum(m) += out.privatePower(j, m);
  }
  out.radiated = out.common + out.privateSum;
  return out;
}

double interference(const NormalizedPower& p, const Eigen::MatrixXd& gains, std::size_t u, std::size_t m) {
  double total = 0.0;
  for (Eigen::Index mp = 0; mp < p.radiated.size(); ++mp) {
    if (static_cast<std::size_t>(mp) != m) total += p.radiated(mp) * gains(u, mp);
  }
  return total;
}

double residual_after(const NormalizedPower& p, const ServedSets& served, std::size_t k, std::size_t m) {
  double total = 0.0;
  const auto& order = served.order[m];
  for (std::size_t r = served.rank[k] + 1; r < order.size(); ++r) total += p.privatePower(order[r], m);
  return total;
}

Eigen::MatrixXd frozen_gains(const ExpansionPoint& exp, const std::vector<Point3>& positions) {
  const std::size_t K = exp.user_count();
  const std::size_t M = positions.size();
  Eigen::MatrixXd g(K, M);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t m = 0; m < M; ++m) {
      const double d = distance(exp.users[k], positions[m]);
      if (d == 0.0) throw Error(ErrorCode::ZeroDistance, "UAV coincides with user");
      g(k, m) = exp.beta(k, m) / std::pow(std::max(d, kMinGainDistance), exp.alpha(k, m));
    }
  }
  return g;
}

double private_rate(const NormalizedPower& p, const Eigen::MatrixXd& g, const ServedSets& served, std::size_t k,
                    std::size_t m) {
  const double residual = residual_after(p, served, k, m);
  const double other = interference(p, g, k, m);
  return std::log2(1.0 + (p.privatePower(k, m) + residual) * g(k, m) + other) -
         std::log2(1.0 + residual * g(k, m) + other);
}

/// Common-stream rate of UAV m as decoded by user j.
double common_decode_rate(const NormalizedPower& p, const Eigen::MatrixXd& g, std::size_t j, std::size_t m) {
  return std::log2(1.0 + p.radiated.dot(g.row(j).transpose())) -
         std::log2(1.0 + p.privateSum(m) * g(j, m) + interference(p, g, j, m));
}

Eigen::VectorXd rates_for(const ExpansionPoint& exp, const Eigen::MatrixXd& gains, const PowerAllocation& power) {
  const std::size_t K = exp.user_count();
  const NormalizedPower p = normalize(power, exp.served, exp.noisePower, exp.options.commonStream);
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t m = exp.served.servingUav[k];
    if (m == kNoUav) continue;
    rates(k) = private_rate(p, gains, exp.served, k, m);
    if (exp.options.commonStream) {
      double common = std::numeric_limits<double>::infinity();
      for (std::size_t j : exp.served.order[m]) common = std::min(common, common_decode_rate(p, gains, j, m));
      rates(k) += common / static_cast<double>(exp.served.served_count(m));
    }
  }
  return rates;
}

}  // namespace

ExpansionPoint build_expansion(const NetworkState& state, const Environment& env,
                               const PropagationParams& params, const Eigen::MatrixXd& lambda,
                               const ExpansionOptions& options) {
  const std::size_t K = env.user_count();
  const std::size_t M = state.uav_count();
  ExpansionPoint exp;
  exp.state = state;
  exp.users = env.users();
  exp.noisePower = params.noisePower;
  exp.options = options;
  exp.lambda = lambda;

  const LinkTable links = evaluate_links(env, state.positions, params, options.assumeLos);
  exp.linkStates = links.states;
  exp.gains = links.gains;
  exp.served = served_sets_and_order(state.assoc, exp.gains);

  exp.alpha.resize(K, M);
  exp.beta.resize(K, M);
  exp.dist2.resize(K, M);
  exp.phi.resize(K, M);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t m = 0; m < M; ++m) {
      const LinkState s = links.state(k, m);
      exp.alpha(k, m) = params.alpha(s);
      exp.beta(k, m) = params.beta(s);
      exp.dist2(k, m) = squared_distance(state.positions[m], exp.users[k]);
      if (exp.dist2(k, m) == 0.0) throw Error(ErrorCode::ZeroDistance, "UAV coincides with user");
      exp.phi(k, m) = exp.alpha(k, m) * exp.beta(k, m) /
                      (2.0 * std::pow(std::sqrt(exp.dist2(k, m)), 2.0 + exp.alpha(k, m)));
    }
  }

  exp.weakest.assign(M, kNoUav);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k : exp.served.order[m]) {
      const std::size_t w = exp.weakest[m];
      if (w == kNoUav || exp.gains(k, m) < exp.gains(w, m) || (exp.gains(k, m) == exp.gains(w, m) && k < w)) {
        exp.weakest[m] = k;
      }
    }
  }

  const Eigen::MatrixXd& c = state.assoc.values;
  const NormalizedPower p = normalize(state.power, exp.served, params.noisePower, options.commonStream);
  exp.thetaHat = Eigen::MatrixXd::Zero(K, M);
  exp.thetaHatP = Eigen::MatrixXd::Zero(K, M);
  exp.thetaC = Eigen::MatrixXd::Zero(K, M);
  exp.thetaP = Eigen::MatrixXd::Zero(K, M);
  for (std::size_t k = 0; k < K; ++k) {
    const double totalK = 1.0 + p.radiated.dot(exp.gains.row(k).transpose());
    for (std::size_t m = 0; m < M; ++m) {
      exp.thetaHat(k, m) = c(k, m) * kInvLn2 / totalK;
      if (exp.served.servingUav[k] == m) {
        const double residual = residual_after(p, exp.served, k, m);
        exp.thetaHatP(k, m) = c(k, m) * kInvLn2 /
                              (1.0 + (p.privatePower(k, m) + residual) * exp.gains(k, m) +
                               interference(p, exp.gains, k, m));
        exp.thetaC(k, m) = c(k, m) * kInvLn2 /
                           (1.0 + p.privateSum(m) * exp.gains(k, m) + interference(p, exp.gains, k, m));
        exp.thetaP(k, m) = c(k, m) * kInvLn2 /
                           (1.0 + residual_after(p, exp.served, k, m) * exp.gains(k, m) +
                            interference(p, exp.gains, k, m));
      }
    }
  }
  // The primed coefficients linearize in P around the same (X, P_t), so they
  // coincide numerically with the position-step ones.
  exp.thetaCPrime = exp.thetaC;
  exp.thetaPPrime = exp.thetaP;

  exp.rates = rates_for(exp, exp.gains, state.power);
  return exp;
}

Eigen::VectorXd frozen_rates(const ExpansionPoint& exp, const std::vector<Point3>& positions,
                             const PowerAllocation& power) {
  return rates_for(exp, frozen_gains(exp, positions), power);
}

double DistanceTerm::value(const Point3& x) const {
  if (linearized) return -2.0 * weight * dot(reference - anchor, x - reference);
  return weight * (y0 - squared_distance(x, anchor));
}

Point3 DistanceTerm::gradient(const Point3& x) const {
  if (linearized) return (-2.0 * weight) * (reference - anchor);
  return (-2.0 * weight) * (x - anchor);
}

double UserRateModel::value(const std::vector<Point3>& X) const {
  double v = constant;
  for (const auto& t : terms) v += t.value(X[t.uav]);
  return v;
}

std::vector<Point3> UserRateModel::gradient(const std::vector<Point3>& X) const {
  std::vector<Point3> g(X.size());
  for (const auto& t : terms) g[t.uav] += t.gradient(X[t.uav]);
  return g;
}

double UserRateModel::quadratic_coefficient(std::size_t uav) const {
  double coef = 0.0;
  for (const auto& t : terms) {
    if (t.uav == uav && !t.linearized) coef -= t.weight;
  }
  return coef;
}

Eigen::VectorXd PositionSurrogate::values(const std::vector<Point3>& X) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pieces.size()));
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    if (pieces[k].empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& piece : pieces[k]) best = std::min(best, piece.value(X));
    v(k) = best;
  }
  return v;
}

PositionSurrogate position_surrogate(const ExpansionPoint& exp) {
  const std::size_t K = exp.user_count();
  const std::size_t M = exp.uav_count();
  const NormalizedPower p = normalize(exp.state.power, exp.served, exp.noisePower, exp.options.commonStream);
  using Weights = std::map<std::pair<std::size_t, std::size_t>, double>;

  auto emit = [&](const Weights& weight, double constant) {
    UserRateModel model;
    model.constant = constant;
    for (const auto& [key, b] : weight) {
      const auto [u, mp] = key;
      if (b == 0.0) continue;
      DistanceTerm term;
      term.uav = mp;
      term.anchor = exp.users[u];
      term.weight = b;
      term.y0 = exp.dist2(u, mp);
      term.reference = exp.state.positions[mp];
      term.linearized = b < 0.0;
      model.terms.push_back(term);
    }
    return model;
  };

  PositionSurrogate out;
  out.pieces.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t m = exp.served.servingUav[k];
    if (m == kNoUav) continue;

    // Net weight on (y_t - y) for each (user, UAV) distance.
    Weights priv;
    const double residual = residual_after(p, exp.served, k, m);
    for (std::size_t mp = 0; mp < M; ++mp) {
      const double ownTotal = mp == m ? p.privatePower(k, m) + residual : p.radiated(mp);
      priv[{k, mp}] += exp.thetaHatP(k, m) * exp.phi(k, mp) * ownTotal;
      const double ownPart = mp == m ? residual : p.radiated(mp);
      priv[{k, mp}] -= exp.thetaP(k, m) * exp.phi(k, mp) * ownPart;
    }
    const double privRate = private_rate(p, exp.gains, exp.served, k, m);
    if (!exp.options.commonStream) {
      out.pieces[k].push_back(emit(priv, privRate));
      continue;
    }
    const double share = 1.0 / static_cast<double>(exp.served.served_count(m));
    for (std::size_t j : exp.served.order[m]) {
      Weights w = priv;
      for (std::size_t mp = 0; mp < M; ++mp) {
        w[{j, mp}] += share * exp.thetaHat(j, m) * exp.phi(j, mp) * p.radiated(mp);
        const double ownPart = mp == m ? p.privateSum(m) : p.radiated(mp);
        w[{j, mp}] -= share * exp.thetaC(j, m) * exp.phi(j, mp) * ownPart;
      }
      out.pieces[k].push_back(emit(w, privRate + share * common_decode_rate(p, exp.gains, j, m)));
    }
  }
  return out;
}

Eigen::VectorXd PowerAssocLayout::pack(const PowerAllocation& p, const Association& c) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  const std::size_t M = commonVar.size();
  for (std::size_t m = 0; m < M; ++m) {
    if (commonVar[m] >= 0) v(commonVar[m]) = p.common(m);
  }
  for (std::size_t i = 0; i < privateVar.size(); ++i) {
    if (privateVar[i] >= 0) v(privateVar[i]) = p.privatePower(i / M, i % M);
    if (assocVar[i] >= 0) v(assocVar[i]) = c.values(i / M, i % M);
  }
  return v;
}

void PowerAssocLayout::unpack(const Eigen::VectorXd& v, PowerAllocation& p, Association& c) const {
  const std::size_t M = commonVar.size();
  for (std::size_t m = 0; m < M; ++m) {
    if (commonVar[m] >= 0) p.common(m) = v(commonVar[m]);
  }
  for (std::size_t i = 0; i < privateVar.size(); ++i) {
    if (privateVar[i] >= 0) p.privatePower(i / M, i % M) = v(privateVar[i]);
    if (assocVar[i] >= 0) c.values(i / M, i % M) = v(assocVar[i]);
  }
}

PenaltyTerms penalty_terms(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& C,
                           const Eigen::MatrixXd& Ct) {
  if (lambda.size() > 0 && lambda.minCoeff() < 0.0) {
    std::ostringstream msg;
    msg << "multiplier " << lambda.minCoeff() << " is negative";
    throw Error(ErrorCode::NegativeMultiplier, msg.str());
  }
  PenaltyTerms t;
  t.rho = -(lambda.array() * C.array() * (1.0 - C.array())).sum();
  t.lbConstant = -(lambda.array() * Ct.array().square()).sum();
  t.lbSlope = (lambda.array() * (2.0 * Ct.array() - 1.0)).matrix();
  return t;
}

double association_rate(const ExpansionPoint& exp, std::size_t k, std::size_t m) {
  if (exp.served.servingUav[k] == m) return exp.rates(k);
  const NormalizedPower p = normalize(exp.state.power, exp.served, exp.noisePower, exp.options.commonStream);
  const Eigen::MatrixXd& g = exp.gains;
  const auto& order = exp.served.order[m];

  // Users of m with lower gain than k would be decoded after it.
  double residual = 0.0;
  for (std::size_t j : order) {
    if (g(j, m) < g(k, m) || (g(j, m) == g(k, m) && j > k)) residual += p.privatePower(j, m);
  }
  const double noiseFree = 1.0 + interference(p, g, k, m);
  double rate = std::log2(1.0 + p.privatePower(k, m) * g(k, m) / (residual * g(k, m) + noiseFree));
  if (exp.options.commonStream) {
    double common = std::log2(1.0 + p.common(m) * g(k, m) / (p.privateSum(m) * g(k, m) + noiseFree));
    for (std::size_t j : order) common = std::min(common, common_decode_rate(p, g, j, m));
    rate += common / static_cast<double>(order.size() + 1);
  }
  return rate;
}

PowerAssocSurrogate power_assoc_surrogate(const ExpansionPoint& exp, const PowerAssocOptions& options) {
  const std::size_t K = exp.user_count();
  const std::size_t M = exp.uav_count();
  const double noise = exp.noisePower;
  const bool common = exp.options.commonStream;
  const PowerAllocation& pt = exp.state.power;
  const Eigen::MatrixXd& g = exp.gains;
  const NormalizedPower p = normalize(pt, exp.served, noise, common);

  PowerAssocSurrogate out;
  out.powerRef = pt;
  out.assocRef = exp.state.assoc;
  PowerAssocLayout& layout = out.layout;
  layout.commonVar.assign(M, -1);
  layout.privateVar.assign(K * M, -1);
  layout.assocVar.assign(K * M, -1);
  std::ptrdiff_t next = 0;
  if (options.optimizePower) {
    for (std::size_t m = 0; m < M; ++m) {
      if (common) layout.commonVar[m] = next++;
      for (std::size_t k : exp.served.order[m]) layout.privateVar[k * M + m] = next++;
    }
  }
  const bool assocFree = options.optimizeAssociation && M >= 2;
  if (assocFree) {
    for (std::size_t i = 0; i < K * M; ++i) layout.assocVar[i] = next++;
  }
  layout.size = static_cast<std::size_t>(next);

  // scale * (radiated power of m' / noise) as an affine expression.
  auto add_radiated = [&](std::size_t mp, double scale, SparseCoeffs& coeffs, double& constant) {
    if (layout.commonVar[mp] >= 0) {
      coeffs.emplace_back(layout.commonVar[mp], scale / noise);
    } else {
      constant += scale * p.common(mp);
    }
    for (std::size_t j : exp.served.order[mp]) {
      const std::ptrdiff_t v = layout.privateVar[j * M + mp];
      if (v >= 0) {
        coeffs.emplace_back(v, scale / noise);
      } else {
        constant += scale * p.privatePower(j, mp);
      }
    }
  };
  // theta * sum (g/noise)(p - p_t) over variable entries only.
  auto add_tangent = [&](ConcaveFunction& f, double coef, std::ptrdiff_t var, double ref) {
    if (var < 0) return;
    f.add_linear(var, -coef);
    f.add_constant(coef * ref);
  };
  auto log_total = [&](std::size_t u, double weight) {
    LogTerm term;
    term.weight = weight;
    term.constant = 1.0;
    for (std::size_t mp = 0; mp < M; ++mp) add_radiated(mp, g(u, mp), term.coeffs, term.constant);
    return term;
  };
  auto interferer_tangent = [&](ConcaveFunction& f, double theta, std::size_t u, std::size_t m) {
    for (std::size_t mp = 0; mp < M; ++mp) {
      if (mp == m) continue;
      const double coef = theta * g(u, mp) / noise;
      add_tangent(f, coef, layout.commonVar[mp], pt.common(mp));
      for (std::size_t j : exp.served.order[mp]) add_tangent(f, coef, layout.privateVar[j * M + mp], pt.privatePower(j, mp));
    }
  };

  auto fold_constant_logs = [](ConcaveFunction& fn) {
    // Log terms without variables are constants.
    for (auto it = fn.logs.begin(); it != fn.logs.end();) {
      if (it->coeffs.empty()) {
        fn.add_constant(it->weight * std::log2(it->constant));
        it = fn.logs.erase(it);
      } else {
        ++it;
      }
    }
  };

  out.pieces.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t m = exp.served.servingUav[k];
    if (m == kNoUav) continue;
    const auto& order = exp.served.order[m];

    // Private part: rHat(k) - tangent of rBarP(k).
    ConcaveFunction priv;
    const double residual = residual_after(p, exp.served, k, m);
    {
      // Received total left after SIC: own and later private streams plus interference.
      LogTerm term;
      term.weight = 1.0;
      term.constant = 1.0;
      for (std::size_t mp = 0; mp < M; ++mp) {
        if (mp != m) add_radiated(mp, g(k, mp), term.coeffs, term.constant);
      }
      for (std::size_t r = exp.served.rank[k]; r < order.size(); ++r) {
        const std::size_t j = order[r];
        const std::ptrdiff_t v = layout.privateVar[j * M + m];
        if (v >= 0) {
          term.coeffs.emplace_back(v, g(k, m) / noise);
        } else {
          term.constant += g(k, m) * p.privatePower(j, m);
        }
      }
      priv.logs.push_back(std::move(term));
    }
    priv.add_constant(-std::log2(1.0 + residual * g(k, m) + interference(p, g, k, m)));
    const double thetaP = exp.thetaPPrime(k, m);
    for (std::size_t r = exp.served.rank[k] + 1; r < order.size(); ++r) {
      const std::size_t j = order[r];
      add_tangent(priv, thetaP * g(k, m) / noise, layout.privateVar[j * M + m], pt.privatePower(j, m));
    }
    interferer_tangent(priv, thetaP, k, m);
    if (assocFree) {
      priv.add_constant(-exp.rates(k));
      for (std::size_t mp = 0; mp < M; ++mp) priv.add_linear(layout.assocVar[k * M + mp], association_rate(exp, k, mp));
    }

    if (!common) {
      fold_constant_logs(priv);
      out.pieces[k].push_back(std::move(priv));
      continue;
    }
    // One piece per decoder of the common stream.
    const double share = 1.0 / static_cast<double>(order.size());
    for (std::size_t j : order) {
      ConcaveFunction f = priv;
      f.logs.push_back(log_total(j, share));
      f.add_constant(-share * std::log2(1.0 + p.privateSum(m) * g(j, m) + interference(p, g, j, m)));
      const double thetaC = share * exp.thetaCPrime(j, m);
      for (std::size_t i : order) add_tangent(f, thetaC * g(j, m) / noise, layout.privateVar[i * M + m], pt.privatePower(i, m));
      interferer_tangent(f, thetaC, j, m);
      fold_constant_logs(f);
      out.pieces[k].push_back(std::move(f));
    }
  }

  const PenaltyTerms pen = penalty_terms(exp.lambda, exp.state.assoc.values, exp.state.assoc.values);
  out.penaltyLb.add_constant(pen.lbConstant);
  for (std::size_t i = 0; i < K * M; ++i) {
    const double slope = pen.lbSlope(i / M, i % M);
    if (layout.assocVar[i] >= 0) {
      out.penaltyLb.add_linear(layout.assocVar[i], slope);
    } else {
      out.penaltyLb.add_constant(slope * exp.state.assoc.values(i / M, i % M));
    }
  }
  return out;
}

Eigen::VectorXd PowerAssocSurrogate::values(const PowerAllocation& p, const Association& c) const {
  const Eigen::VectorXd v = layout.pack(p, c);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pieces.size()));
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    if (pieces[k].empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& piece : pieces[k]) best = std::min(best, piece.value(v));
    out(k) = best;
  }
  return out;
}

}  // namespace rsmaplace
