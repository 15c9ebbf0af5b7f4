#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vpath/geo.hpp"
#include "vpath/ingest.hpp"

namespace vpath {

/// One path class: a centerline from the west port to the east port.
struct RouteArchetype {
  std::string class_label;
  std::vector<GeoPoint> centerline;
  double nominal_speed = 4.2;  // m/s
  double lateral_sigma = 10.0; // stationary sigma of the mean-reverting offset, m
  double lane_spread = 0.0;    // width of the per-voyage constant offset band, m
};

struct GeneratorConfig {
  std::vector<RouteArchetype> archetypes;
  std::vector<std::size_t> counts; // aligned with archetypes
  double sample_period = 1.0;      // s
  double gps_noise_sigma = 5.0;    // m
  std::uint64_t seed = 1;
  double lateral_tau = 10.0;       // offset correlation time, s
  double port_taper = 300.0;       // offsets fade to zero within this distance of a port, m
  std::int64_t start_time = 1600000000;
  double departure_interval = 3600.0; // s between successive voyage departures
};

/// Throws ValidationError on an inconsistent configuration.
void validate(const GeneratorConfig& config);

/// West port of the default scenario.
GeoPoint default_origin();

/// Converts a local-meter polyline (x east, y north of the west port) to degrees.
std::vector<GeoPoint> polyline_from_local(const std::vector<LocalPoint>& local, const GeoPoint& origin);

/// Five classes between two shared ports, counts NE 14, NM 40, NW 16, S 52, SW 2.
GeneratorConfig default_config();

/// Centerline of the unlabeled corridor used by generate_novel.
std::vector<GeoPoint> novel_centerline();

/// Deterministic for a fixed seed; each voyage draws from its own sub-seed.
std::vector<LabeledVoyage> generate(const GeneratorConfig& config);

/// Voyages on the novel corridor, ids N001...
std::vector<Voyage> generate_novel(const GeneratorConfig& config, std::size_t count);

/// Reads a JSON configuration. Missing keys take default_config() values;
/// archetype centerlines may be given as `centerline` ([[lat, lon], ...]) or
/// `centerline_m` ([[x, y], ...] meters from `origin`).
GeneratorConfig read_config(std::istream& in);
GeneratorConfig read_config_file(const std::string& path);
void write_config(std::ostream& out, const GeneratorConfig& config);

} // namespace vpath
