#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include "rsmaplace/channel.hpp"
#include "rsmaplace/geometry.hpp"
#include "rsmaplace/rsma_model.hpp"

namespace testsupport {

using rsmaplace::Point3;

inline std::filesystem::path scenario_dir() { return RSMAPLACE_SCENARIO_DIR; }

/// Random binary state: every UAV serves at least one user when K >= M,
/// powers fill a random fraction of pMax.
inline rsmaplace::NetworkState random_state(std::mt19937_64& rng, std::size_t K, std::size_t M, double pMax,
                                            bool withCommon = true) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> xy(0.0, 800.0);
  std::uniform_real_distribution<double> z(101.0, 500.0);
  rsmaplace::NetworkState s;
  for (std::size_t m = 0; m < M; ++m) s.positions.push_back({xy(rng), xy(rng), z(rng)});
  s.assoc.values = Eigen::MatrixXd::Zero(K, M);
  s.assoc.capacity.assign(M, static_cast<int>(K));
  std::vector<std::size_t> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < K; ++i) {
    const std::size_t m = i < M ? i : std::uniform_int_distribution<std::size_t>(0, M - 1)(rng);
    s.assoc.values(perm[i], m) = 1.0;
  }
  s.power = rsmaplace::PowerAllocation::zeros(K, M);
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<double> w;
    double total = 0.0;
    const double c = withCommon ? u01(rng) : 0.0;
    total += c;
    for (std::size_t k = 0; k < K; ++k) {
      w.push_back(s.assoc.values(k, m) > 0.5 ? u01(rng) : 0.0);
      total += w.back();
    }
    const double budget = pMax * (0.2 + 0.8 * u01(rng));
    s.power.common(m) = total > 0 ? budget * c / total : 0.0;
    for (std::size_t k = 0; k < K; ++k) s.power.privatePower(k, m) = total > 0 ? budget * w[k] / total : 0.0;
  }
  return s;
}

/// Gains with positive random magnitudes spanning a few decades.
inline Eigen::MatrixXd random_gains(std::mt19937_64& rng, std::size_t K, std::size_t M) {
  std::uniform_real_distribution<double> e(-13.0, -9.0);
  Eigen::MatrixXd g(K, M);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t m = 0; m < M; ++m) g(k, m) = std::pow(10.0, e(rng));
  return g;
}

struct OracleRates {
  Eigen::VectorXd common;
  Eigen::VectorXd priv;
  Eigen::VectorXd total;
};

/// Direct SINR/rate formulas with no shared code: decoding order by
/// decreasing gain, later users interfere, common rate min over served
/// users split evenly.
inline OracleRates oracle_rates(const rsmaplace::NetworkState& s, const Eigen::MatrixXd& g, double noise) {
  const auto K = s.assoc.values.rows();
  const auto M = s.assoc.values.cols();
  OracleRates out{Eigen::VectorXd::Zero(K), Eigen::VectorXd::Zero(K), Eigen::VectorXd::Zero(K)};
  auto served = [&](Eigen::Index k, Eigen::Index m) { return s.assoc.values(k, m) > 0.5; };
  auto later = [&](Eigen::Index j, Eigen::Index k, Eigen::Index m) {
    return g(j, m) < g(k, m) || (g(j, m) == g(k, m) && j > k);
  };
  for (Eigen::Index m = 0; m < M; ++m) {
    double commonMin = INFINITY;
    int n = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
      if (!served(k, m)) continue;
      ++n;
      double other = 0.0;
      for (Eigen::Index mp = 0; mp < M; ++mp) {
        if (mp == m) continue;
        double tx = s.power.common(mp);
        for (Eigen::Index j = 0; j < K; ++j)
          if (served(j, mp)) tx += s.power.privatePower(j, mp);
        other += tx * g(k, mp);
      }
      double allPrivate = 0.0;
      double after = 0.0;
      for (Eigen::Index j = 0; j < K; ++j) {
        if (!served(j, m)) continue;
        allPrivate += s.power.privatePower(j, m);
        if (j != k && later(j, k, m)) after += s.power.privatePower(j, m);
      }
      const double sc = s.power.common(m) * g(k, m) / (allPrivate * g(k, m) + other + noise);
      const double sp = s.power.privatePower(k, m) * g(k, m) / (after * g(k, m) + other + noise);
      commonMin = std::min(commonMin, std::log2(1.0 + sc));
      out.priv(k) = std::log2(1.0 + sp);
    }
    for (Eigen::Index k = 0; k < K; ++k)
      if (served(k, m)) out.common(k) = commonMin / n;
  }
  out.total = out.common + out.priv;
  return out;
}

/// Single 10 x 10 box centered at (15, 0), 30 m tall.
inline rsmaplace::BuildingPrism reference_box() {
  return rsmaplace::BuildingPrism::axis_aligned_box(10.0, 20.0, -5.0, 5.0, 30.0);
}

/// Max of f over [lo, hi]^2: a 1e-3 grid, then a 1e-5 grid over a +-0.05
/// window around the coarse winner.
template <class F>
double grid_max_2d(F f, double lo, double hi) {
  double best = -INFINITY, bx = lo, by = lo;
  const int n = static_cast<int>(std::lround((hi - lo) / 1e-3));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double x = lo + (hi - lo) * i / n, y = lo + (hi - lo) * j / n;
      const double v = f(x, y);
      if (v > best) best = v, bx = x, by = y;
    }
  }
  for (int i = -5000; i <= 5000; ++i) {
    for (int j = -5000; j <= 5000; ++j) {
      const double x = std::clamp(bx + 1e-5 * i, lo, hi), y = std::clamp(by + 1e-5 * j, lo, hi);
      best = std::max(best, f(x, y));
    }
  }
  return best;
}

}  // namespace testsupport
