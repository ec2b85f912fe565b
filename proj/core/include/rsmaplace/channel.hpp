#pragma once

#include <cmath>

#include "rsmaplace/geometry.hpp"

namespace rsmaplace {

enum class LinkState { LoS, NLoS };

/// Linear-scale path-loss parameters. betaLos/betaNlos are the channel power
/// gains at 1 m, noisePower is the band-total noise in watts.
struct PropagationParams {
  double alphaLos{2.0};
  double alphaNlos{3.3};
  double betaLos{0.0};
  double betaNlos{0.0};
  double noisePower{0.0};

  /// Throws Error(InvalidArgument) if the ordering or positivity invariants fail.
  void validate() const;

  double alpha(LinkState s) const noexcept { return s == LinkState::LoS ? alphaLos : alphaNlos; }
  double beta(LinkState s) const noexcept { return s == LinkState::LoS ? betaLos : betaNlos; }

  /// Reference link budget: alpha 2 / 3.3, beta -46.43 / -56.43 dB, noise -107 dBm.
  static PropagationParams reference();
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Gains are evaluated with distances clamped from below to this value.
inline constexpr double kMinGainDistance = 1.0;

LinkState link_state(const BlockagePlaneSet& blockage, const Point3& x);

/// beta / d^alpha for the given state. Throws Error(ZeroDistance) if x == user.
double channel_gain(const Point3& user, const Point3& x, LinkState state,
                    const PropagationParams& params);

}  // namespace rsmaplace
