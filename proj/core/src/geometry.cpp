#include "rsmaplace/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>

#include "rsmaplace/error.hpp"

namespace rsmaplace {

namespace {

double cross2(const Point2& a, const Point2& b, const Point2& c) {
  // (b - a) x (c - a)
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

Point3 lift(const Point2& p, double z) { return {p.x, p.y, z}; }

}  // namespace

BuildingPrism::BuildingPrism(std::vector<Point2> footprint, double height)
    : footprint_(std::move(footprint)), height_(height) {
  const std::size_t n = footprint_.size();
  if (n < 3) {
    throw Error(ErrorCode::InvalidArgument, "building footprint needs at least 3 vertices");
  }
  if (!(height_ > 0.0) || !std::isfinite(height_)) {
    throw Error(ErrorCode::InvalidArgument, "building height must be positive and finite");
  }
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = footprint_[i];
    const Point2& b = footprint_[(i + 1) % n];
    const Point2& c = footprint_[(i + 2) % n];
    if (!(cross2(a, b, c) > 0.0)) {
      std::ostringstream msg;
      msg << "footprint is not strictly convex and counter-clockwise at vertex " << (i + 1) % n;
      throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    const double h0 = std::atan2(b.y - a.y, b.x - a.x);
    const double h1 = std::atan2(c.y - b.y, c.x - b.x);
    double turn = h1 - h0;
    while (turn <= -std::numbers::pi) turn += 2.0 * std::numbers::pi;
    while (turn > std::numbers::pi) turn -= 2.0 * std::numbers::pi;
    turning += turn;
  }
  if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "footprint winds more than once");
  }

  // Shoelace centroid.
  double area2 = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& a = footprint_[i];
    const Point2& b = footprint_[(i + 1) % n];
    const double w = a.x * b.y - b.x * a.y;
    area2 += w;
    cx += (a.x + b.x) * w;
    cy += (a.y + b.y) * w;
  }
  centroid_ = {cx / (3.0 * area2), cy / (3.0 * area2), 0.5 * height_};
}

BuildingPrism BuildingPrism::axis_aligned_box(double xMin, double xMax, double yMin, double yMax,
                                              double height) {
  return BuildingPrism({{xMin, yMin}, {xMax, yMin}, {xMax, yMax}, {xMin, yMax}}, height);
}

Point2 BuildingPrism::face_normal(std::size_t face) const {
  const Point2& a = footprint_[face];
  const Point2& b = footprint_[(face + 1) % footprint_.size()];
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  return {dy / len, -dx / len};
}

bool BuildingPrism::contains_horizontal(double x, double y) const {
  const std::size_t n = footprint_.size();
  const Point2 p{x, y};
  for (std::size_t i = 0; i < n; ++i) {
    if (cross2(footprint_[i], footprint_[(i + 1) % n], p) < 0.0) return false;
  }
  return true;
}

namespace {

BlockingPlane make_plane(const Point3& user, const Point3& a, const Point3& b,
                         const Point3& shadowRef, std::size_t buildingId, std::size_t edgeId) {
  Point3 n = cross(a - user, b - user);
  const double len = norm(n);
  n = (1.0 / len) * n;
  BlockingPlane plane{n, dot(n, user), buildingId, edgeId};
  if (directed_distance(plane, shadowRef) > 0.0) {
    plane.normal = -1.0 * plane.normal;
    plane.originOffset = -plane.originOffset;
  }
  return plane;
}

}  // namespace

std::vector<BlockingPlane> build_blockage(const Point3& user, const BuildingPrism& building,
                                          std::size_t buildingId) {
  if (building.contains_horizontal(user.x, user.y)) {
    std::ostringstream msg;
    msg << "user at (" << user.x << ", " << user.y << ") lies inside building " << buildingId;
    throw Error(ErrorCode::UserInsideBuilding, msg.str());
  }
  if (user.z >= building.height()) return {};

  const auto& fp = building.footprint();
  const std::size_t n = fp.size();
  std::vector<char> visible(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 nf = building.face_normal(i);
    const Point2& a = fp[i];
    const Point2& b = fp[(i + 1) % n];
    const double mx = 0.5 * (a.x + b.x) - user.x;
    const double my = 0.5 * (a.y + b.y) - user.y;
    visible[i] = (nf.x * mx + nf.y * my) < 0.0 ? 1 : 0;
  }

  const Point3 shadowRef = user + 2.0 * (building.centroid() - user);
  const double h = building.height();
  std::vector<BlockingPlane> planes;
  for (std::size_t i = 0; i < n; ++i) {
    if (!visible[i]) continue;
    const std::size_t prev = (i + n - 1) % n;
    const std::size_t next = (i + 1) % n;
    if (!visible[prev]) {
      planes.push_back(make_plane(user, lift(fp[i], 0.0), lift(fp[i], h), shadowRef, buildingId, n + i));
    }
    planes.push_back(make_plane(user, lift(fp[i], h), lift(fp[next], h), shadowRef, buildingId, i));
    if (!visible[next]) {
      planes.push_back(
          make_plane(user, lift(fp[next], 0.0), lift(fp[next], h), shadowRef, buildingId, n + next));
    }
  }
  return planes;
}

BlockagePlaneSet build_user_blockage(std::size_t userId, const Point3& user,
                                     std::span<const BuildingPrism> buildings) {
  BlockagePlaneSet set;
  set.userId = userId;
  set.planesByBuilding.reserve(buildings.size());
  for (std::size_t q = 0; q < buildings.size(); ++q) {
    set.planesByBuilding.push_back(build_blockage(user, buildings[q], q));
  }
  return set;
}

bool is_los(const BlockagePlaneSet& blockage, const Point3& p) {
  for (const auto& planes : blockage.planesByBuilding) {
    if (planes.empty()) continue;
    const bool anyPositive = std::any_of(planes.begin(), planes.end(), [&](const BlockingPlane& pl) {
      return directed_distance(pl, p) > kBoundaryTolerance;
    });
    if (!anyPositive) return false;
  }
  return true;
}

bool raycast_blocked(const Point3& user, const Point3& p, std::span<const BuildingPrism> buildings) {
  const Point3 d = p - user;
  for (const auto& b : buildings) {
    double t0 = 0.0;
    double t1 = 1.0;
    // Each slab is a + b t >= 0.
    auto clip = [&](double a, double slope) {
      if (slope == 0.0) {
        if (a < 0.0) t1 = -1.0;
        return;
      }
      const double t = -a / slope;
      if (slope > 0.0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
    };
    clip(user.z, d.z);
    clip(b.height() - user.z, -d.z);
    const auto& fp = b.footprint();
    const std::size_t n = fp.size();
    for (std::size_t i = 0; i < n && t0 < t1; ++i) {
      const Point2& a = fp[i];
      const Point2& c = fp[(i + 1) % n];
      const double ex = c.x - a.x;
      const double ey = c.y - a.y;
      // (c - a) x (q(t) - a) >= 0
      const double a0 = ex * (user.y - a.y) - ey * (user.x - a.x);
      const double a1 = ex * d.y - ey * d.x;
      clip(a0, a1);
    }
    if (t0 < t1) return true;
  }
  return false;
}

LosLinearization active_los_constraints(std::span<const BlockagePlaneSet> blockage,
                                        std::span<const std::size_t> servedUsers,
                                        const Point3& xRef, double margin) {
  LosLinearization out;
  for (std::size_t k : servedUsers) {
    const BlockagePlaneSet& set = blockage[k];
    for (const auto& planes : set.planesByBuilding) {
      if (planes.empty()) continue;
      const BlockingPlane* best = &planes.front();
      double bestDist = directed_distance(*best, xRef);
      for (const auto& pl : planes) {
        const double dist = directed_distance(pl, xRef);
        if (dist > bestDist) {
          best = &pl;
          bestDist = dist;
        }
      }
      LinearConstraint c;
      c.normal = best->normal;
      c.offset = best->originOffset + margin;
      c.userId = k;
      c.buildingId = best->buildingId;
      c.edgeId = best->edgeId;
      c.distanceAtReference = bestDist;
      c.infeasibleAtReference = bestDist <= kBoundaryTolerance;
      out.infeasibleAtReference = out.infeasibleAtReference || c.infeasibleAtReference;
      out.constraints.push_back(c);
    }
  }
  return out;
}

std::vector<LinearConstraint> shadow_constraints(const BlockagePlaneSet& blockage, const Point3& xRef,
                                                double margin) {
  const std::vector<BlockingPlane>* deepest = nullptr;
  double deepestDist = kBoundaryTolerance;
  for (const auto& planes : blockage.planesByBuilding) {
    if (planes.empty()) continue;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& pl : planes) worst = std::max(worst, directed_distance(pl, xRef));
    if (worst <= deepestDist) {
      deepest = &planes;
      deepestDist = worst;
    }
  }
  std::vector<LinearConstraint> out;
  if (deepest == nullptr || deepestDist > -1e-6) return out;
  for (const auto& pl : *deepest) {
    const double dist = directed_distance(pl, xRef);
    LinearConstraint c;
    c.normal = -1.0 * pl.normal;
    c.offset = -(pl.originOffset + std::max(0.5 * dist, -margin));
    c.userId = blockage.userId;
    c.buildingId = pl.buildingId;
    c.edgeId = pl.edgeId;
    c.distanceAtReference = -dist;
    out.push_back(c);
  }
  return out;
}

Environment::Environment(std::vector<BuildingPrism> buildings, std::vector<Point3> users)
    : buildings_(std::move(buildings)), users_(std::move(users)) {
  blockage_.reserve(users_.size());
  for (std::size_t k = 0; k < users_.size(); ++k) {
    blockage_.push_back(build_user_blockage(k, users_[k], buildings_));
  }
}

}  // namespace rsmaplace
