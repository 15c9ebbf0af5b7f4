#include "vpath/geo.hpp"

#include <algorithm>
#include <string>

#include "vpath/error.hpp"

namespace vpath {

namespace {

// cos(lat) below this makes the longitude scale meaningless.
constexpr double kMinLonScale = 1e-6;

} // namespace

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

bool is_valid(const LocalPoint& p) noexcept { return std::isfinite(p.x) && std::isfinite(p.y); }

void validate(const GeoPoint& p) {
  if (!std::isfinite(p.lat) || p.lat < -90.0 || p.lat > 90.0) {
    throw ValidationError("latitude out of range: " + std::to_string(p.lat));
  }
  if (!std::isfinite(p.lon) || p.lon < -180.0 || p.lon > 180.0) {
    throw ValidationError("longitude out of range: " + std::to_string(p.lon));
  }
}

Projection make_projection(const GeoPoint& origin) {
  validate(origin);
  Projection proj;
  proj.origin = origin;
  proj.meters_per_deg_lat = std::numbers::pi * kEarthRadiusM / 180.0;
  const double scale = std::cos(origin.lat * kDegToRad);
  if (!(scale > kMinLonScale)) {
    throw ValidationError("degenerate projection origin at latitude " + std::to_string(origin.lat));
  }
  proj.meters_per_deg_lon = proj.meters_per_deg_lat * scale;
  return proj;
}

Projection projection_for(std::span<const GeoPoint> points) {
  if (points.empty()) throw ValidationError("cannot anchor a projection on zero points");
  double lat_sum = 0.0;
  double lon_sum = 0.0;
  double lon_min = 180.0;
  double lon_max = -180.0;
  for (const auto& p : points) {
    validate(p);
    lat_sum += p.lat;
    lon_sum += p.lon;
    lon_min = std::min(lon_min, p.lon);
    lon_max = std::max(lon_max, p.lon);
  }
  if (lon_max - lon_min >= 180.0) {
    throw ValidationError("point set straddles the antimeridian");
  }
  const auto n = static_cast<double>(points.size());
  return make_projection({lat_sum / n, lon_sum / n});
}

LocalPoint project(const GeoPoint& p, const Projection& proj) {
  return {(p.lon - proj.origin.lon) * proj.meters_per_deg_lon,
          (p.lat - proj.origin.lat) * proj.meters_per_deg_lat};
}

GeoPoint unproject(const LocalPoint& p, const Projection& proj) {
  return {proj.origin.lat + p.y / proj.meters_per_deg_lat,
          proj.origin.lon + p.x / proj.meters_per_deg_lon};
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.lat * kDegToRad) * std::cos(b.lat * kDegToRad) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

} // namespace vpath
