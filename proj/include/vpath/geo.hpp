#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace vpath {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

/// Geodetic position in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Position in meters on a local tangent plane (x east, y north).
struct LocalPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const LocalPoint&, const LocalPoint&) = default;
};

bool is_valid(const GeoPoint& p) noexcept;
bool is_valid(const LocalPoint& p) noexcept;

/// Throws ValidationError naming the offending coordinate.
void validate(const GeoPoint& p);

/// Equirectangular projection anchored at `origin`.
struct Projection {
  GeoPoint origin;
  double meters_per_deg_lat = 0.0;
  double meters_per_deg_lon = 0.0;
};

/// Rejects invalid or (near-)polar origins where the longitude scale vanishes.
Projection make_projection(const GeoPoint& origin);

/// Projection anchored at the centroid of `points`. Rejects empty input and
/// point sets whose longitudes span 180 degrees or more.
Projection projection_for(std::span<const GeoPoint> points);

LocalPoint project(const GeoPoint& p, const Projection& proj);
GeoPoint unproject(const LocalPoint& p, const Projection& proj);

inline double squared_distance(const LocalPoint& a, const LocalPoint& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double euclidean_distance(const LocalPoint& a, const LocalPoint& b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept;

} // namespace vpath
