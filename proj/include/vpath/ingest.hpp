#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpath/geo.hpp"

namespace vpath {

struct TrackPoint {
  std::int64_t time = 0; // seconds since the Unix epoch
  GeoPoint position;
  std::optional<double> fuel_rate; // L/h
  std::optional<double> speed;     // m/s
};

/// One port-to-port trip: at least two points with strictly increasing times.
struct Voyage {
  std::string id;
  std::vector<TrackPoint> points;

  bool has_fuel() const noexcept;
  bool has_speed() const noexcept;
};

struct LabeledVoyage {
  Voyage voyage;
  std::string class_label;
};

/// Throws ValidationError describing the first violated invariant.
void validate(const Voyage& v);

struct ParseOptions {
  /// Skip unparseable rows instead of failing on the first one.
  bool lenient = false;
};

struct ParseResult {
  std::vector<Voyage> voyages; // in order of first appearance
  std::size_t dropped_voyages = 0;
  std::size_t skipped_rows = 0;
  std::size_t duplicate_rows = 0; // rows collapsed by the one-second rule
};

/// Reads `voyage_id,timestamp,lat,lon[,fuel_rate,speed]`. Timestamps may be
/// epoch seconds (integer or decimal) or RFC 3339. Points are bucketed to
/// whole seconds, keeping the earliest record of each bucket.
ParseResult parse_voyages(std::istream& in, const ParseOptions& options = {});
ParseResult parse_voyages_file(const std::string& path, const ParseOptions& options = {});

/// Seconds since the epoch for an RFC 3339 timestamp.
double parse_rfc3339(std::string_view text);

/// Writes the input format back out; channels are emitted when any voyage has them.
void write_voyages(std::ostream& out, std::span<const Voyage> voyages);

/// `voyage_id,class_label`; duplicate ids are an InputError.
std::map<std::string, std::string> read_labels(std::istream& in);
std::map<std::string, std::string> read_labels_file(const std::string& path);
void write_labels(std::ostream& out, std::span<const LabeledVoyage> voyages);

/// Pairs voyages with labels. Voyages without a label are an InputError.
std::vector<LabeledVoyage> attach_labels(std::span<const Voyage> voyages,
                                         const std::map<std::string, std::string>& labels);

struct ClassSummary {
  std::string class_label;
  std::size_t voyage_count = 0;
  std::optional<double> mean_fuel; // liters
  double mean_duration = 0.0;      // s
  double mean_distance = 0.0;      // m
  double mean_speed = 0.0;         // m/s
};

/// Haversine track length in meters.
double track_length(const Voyage& v);
/// Trapezoidal integral of fuel_rate over time, in liters.
std::optional<double> fuel_used(const Voyage& v);

/// One summary per distinct label, sorted by label.
std::vector<ClassSummary> class_statistics(std::span<const LabeledVoyage> voyages);
void write_statistics(std::ostream& out, std::span<const ClassSummary> stats);

} // namespace vpath
