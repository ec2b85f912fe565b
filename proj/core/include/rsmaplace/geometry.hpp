#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace rsmaplace {

struct Point2 {
  double x{0.0};
  double y{0.0};
};

struct Point3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  Point3& operator+=(const Point3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Point3& operator-=(const Point3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  friend Point3 operator+(Point3 a, const Point3& b) { return a += b; }
  friend Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
  friend Point3 operator*(double s, const Point3& p) { return {s * p.x, s * p.y, s * p.z}; }
  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }
inline double squared_distance(const Point3& a, const Point3& b) {
  const Point3 d = a - b;
  return dot(d, d);
}
inline double distance(const Point3& a, const Point3& b) { return std::sqrt(squared_distance(a, b)); }

/// Horizontal extent of the simulated area, meters.
struct AreaBounds {
  double xMin{0.0};
  double xMax{0.0};
  double yMin{0.0};
  double yMax{0.0};

  bool contains(double x, double y) const { return x >= xMin && x <= xMax && y >= yMin && y <= yMax; }
};

/// Vertical prism standing on z = 0 with a convex, counter-clockwise footprint.
class BuildingPrism {
 public:
  /// Throws Error(InvalidArgument) unless the footprint has at least three
  /// vertices, is strictly convex and counter-clockwise, and height > 0.
  BuildingPrism(std::vector<Point2> footprint, double height);

  const std::vector<Point2>& footprint() const noexcept { return footprint_; }
  double height() const noexcept { return height_; }
  std::size_t vertex_count() const noexcept { return footprint_.size(); }

  /// Volume centroid: footprint area centroid at half height.
  Point3 centroid() const noexcept { return centroid_; }

  /// Outward horizontal unit normal of side face i (edge i -> i+1).
  Point2 face_normal(std::size_t face) const;

  /// True if (x, y) lies inside or on the boundary of the footprint.
  bool contains_horizontal(double x, double y) const;

  static BuildingPrism axis_aligned_box(double xMin, double xMax, double yMin, double yMax,
                                        double height);

 private:
  std::vector<Point2> footprint_;
  double height_;
  Point3 centroid_;
};

/// Plane through a user and one visible outer edge of a building.
/// Edge ids: [0, n) are top edges of face i, [n, 2n) the vertical edge at
/// footprint vertex (id - n).
struct BlockingPlane {
  Point3 normal;
  double originOffset{0.0};
  std::size_t buildingId{0};
  std::size_t edgeId{0};
};

/// Directed distances within this band of zero count as non-positive.
inline constexpr double kBoundaryTolerance = 1e-9;

/// Blocking planes of one building as seen from `user`. Empty when the user
/// stands at or above roof height. Throws Error(UserInsideBuilding) when the
/// user's horizontal projection is inside or on the footprint.
std::vector<BlockingPlane> build_blockage(const Point3& user, const BuildingPrism& building,
                                          std::size_t buildingId = 0);

inline double directed_distance(const BlockingPlane& plane, const Point3& p) {
  return dot(plane.normal, p) - plane.originOffset;
}

struct BlockagePlaneSet {
  std::size_t userId{0};
  std::vector<std::vector<BlockingPlane>> planesByBuilding;
};

BlockagePlaneSet build_user_blockage(std::size_t userId, const Point3& user,
                                     std::span<const BuildingPrism> buildings);

/// LoS iff every building with planes has at least one plane with directed
/// distance above the boundary tolerance.
bool is_los(const BlockagePlaneSet& blockage, const Point3& p);

/// Exact test whether the open segment (user, p) passes through any prism
/// volume. Independent of the plane construction.
bool raycast_blocked(const Point3& user, const Point3& p, std::span<const BuildingPrism> buildings);

/// Half-space normal . x >= offset (offset already includes the margin).
struct LinearConstraint {
  Point3 normal;
  double offset{0.0};
  std::size_t userId{0};
  std::size_t buildingId{0};
  std::size_t edgeId{0};
  /// Directed distance of the chosen plane at the reference point.
  double distanceAtReference{0.0};
  bool infeasibleAtReference{false};
};

struct LosLinearization {
  std::vector<LinearConstraint> constraints;
  bool infeasibleAtReference{false};
};

/// For each (served user, building) pair, the plane with the largest directed
/// distance at `xRef` becomes one half-space constraint.
LosLinearization active_los_constraints(std::span<const BlockagePlaneSet> blockage,
                                        std::span<const std::size_t> servedUsers,
                                        const Point3& xRef, double margin);

/// Keeps `xRef` inside the shadow of the building that blocks it most deeply:
/// one half-space per plane of that building, directed distance at most
/// max(distance at xRef / 2, -margin). Empty when xRef is LoS or lies within
/// 1e-6 of that shadow's boundary.
std::vector<LinearConstraint> shadow_constraints(const BlockagePlaneSet& blockage, const Point3& xRef, double margin);

/// Users, buildings and the per-user blocking planes built once up front.
class Environment {
 public:
  Environment(std::vector<BuildingPrism> buildings, std::vector<Point3> users);

  const std::vector<BuildingPrism>& buildings() const noexcept { return buildings_; }
  const std::vector<Point3>& users() const noexcept { return users_; }
  const std::vector<BlockagePlaneSet>& blockage() const noexcept { return blockage_; }
  std::size_t user_count() const noexcept { return users_.size(); }

  bool is_los(std::size_t userId, const Point3& p) const { return rsmaplace::is_los(blockage_[userId], p); }

 private:
  std::vector<BuildingPrism> buildings_;
  std::vector<Point3> users_;
  std::vector<BlockagePlaneSet> blockage_;
};

}  // namespace rsmaplace
