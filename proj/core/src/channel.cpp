#include "rsmaplace/channel.hpp"

#include <algorithm>

#include "rsmaplace/error.hpp"

namespace rsmaplace {

void PropagationParams::validate() const {
  if (!(alphaLos > 0.0) || !(alphaNlos >= alphaLos)) {
    throw Error(ErrorCode::InvalidArgument, "path-loss exponents need alphaNlos >= alphaLos > 0");
  }
  if (!(betaNlos > 0.0) || !(betaLos > betaNlos)) {
    throw Error(ErrorCode::InvalidArgument, "reference gains need betaLos > betaNlos > 0");
  }
  if (!(noisePower > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise power must be positive");
  }
}

PropagationParams PropagationParams::reference() {
  return {2.0, 3.3, db_to_linear(-46.43), db_to_linear(-56.43), dbm_to_watts(-107.0)};
}

LinkState link_state(const BlockagePlaneSet& blockage, const Point3& x) {
  return is_los(blockage, x) ? LinkState::LoS : LinkState::NLoS;
}

double channel_gain(const Point3& user, const Point3& x, LinkState state,
                    const PropagationParams& params) {
  const double d = distance(user, x);
  if (d == 0.0) throw Error(ErrorCode::ZeroDistance, "UAV coincides with user");
  return params.beta(state) / std::pow(std::max(d, kMinGainDistance), params.alpha(state));
}

}  // namespace rsmaplace
