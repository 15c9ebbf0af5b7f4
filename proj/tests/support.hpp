#pragma once

#include <random>
#include <string>
#include <vector>

#include "vpath/annd.hpp"
#include "vpath/geo.hpp"
#include "vpath/ingest.hpp"

namespace testing {

inline const vpath::Projection& test_projection() {
  static const auto proj = vpath::make_projection({59.4, 18.35});
  return proj;
}

/// Voyage at 1 Hz through the given local points.
inline vpath::Voyage voyage_from_local(const std::string& id, const std::vector<vpath::LocalPoint>& pts,
                                       std::int64_t start = 0) {
  vpath::Voyage v;
  v.id = id;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    vpath::TrackPoint p;
    p.time = start + static_cast<std::int64_t>(i);
    p.position = vpath::unproject(pts[i], test_projection());
    v.points.push_back(p);
  }
  return v;
}

/// Points every `step` meters along a polyline.
inline std::vector<vpath::LocalPoint> sample_polyline(const std::vector<vpath::LocalPoint>& poly, double step) {
  std::vector<vpath::LocalPoint> out;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const double len = vpath::euclidean_distance(poly[i], poly[i + 1]);
    const int n = static_cast<int>(len / step);
    for (int k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / n;
      out.push_back({poly[i].x + (poly[i + 1].x - poly[i].x) * t, poly[i].y + (poly[i + 1].y - poly[i].y) * t});
    }
  }
  out.push_back(poly.back());
  return out;
}

inline vpath::Path random_path(std::mt19937_64& rng, std::size_t n, double spread = 1000.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  vpath::Path p;
  p.voyage_id = "r";
  for (std::size_t i = 0; i < n; ++i) p.points.push_back({u(rng), u(rng)});
  return p;
}

} // namespace testing
