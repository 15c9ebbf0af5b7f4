#include "vpath/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "vpath/csv.hpp"
#include "vpath/error.hpp"

namespace vpath {

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int two_digits(std::string_view s, std::size_t pos) {
  if (pos + 2 > s.size() || !is_digits(s.substr(pos, 2))) {
    throw ParseError("malformed RFC 3339 timestamp '" + std::string(s) + "'");
  }
  return (s[pos] - '0') * 10 + (s[pos + 1] - '0');
}

double parse_timestamp(std::string_view text, std::size_t line) {
  if (text.find('-', 1) != std::string_view::npos && text.find(':') != std::string_view::npos) {
    try {
      return parse_rfc3339(text);
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " on line " + std::to_string(line), line);
    }
  }
  return csv::parse_double(text, line, "timestamp");
}

struct RawPoint {
  double time;
  std::size_t order;
  TrackPoint point;
};

} // namespace

bool Voyage::has_fuel() const noexcept {
  return !points.empty() &&
         std::all_of(points.begin(), points.end(), [](const auto& p) { return p.fuel_rate.has_value(); });
}

bool Voyage::has_speed() const noexcept {
  return !points.empty() &&
         std::all_of(points.begin(), points.end(), [](const auto& p) { return p.speed.has_value(); });
}

void validate(const Voyage& v) {
  if (v.id.empty()) throw ValidationError("voyage with empty id");
  if (v.points.size() < 2) {
    throw ValidationError("voyage '" + v.id + "' has fewer than 2 points");
  }
  for (std::size_t i = 0; i < v.points.size(); ++i) {
    if (!is_valid(v.points[i].position)) {
      throw ValidationError("voyage '" + v.id + "' point " + std::to_string(i) +
                            " has an invalid position");
    }
    if (i > 0 && v.points[i].time <= v.points[i - 1].time) {
      throw ValidationError("voyage '" + v.id + "' timestamps not strictly increasing at point " +
                            std::to_string(i));
    }
  }
}

double parse_rfc3339(std::string_view s) {
  // YYYY-MM-DD[T ]HH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
  if (s.size() < 20 || !is_digits(s.substr(0, 4)) || s[4] != '-' || s[7] != '-' ||
      (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || s[13] != ':' || s[16] != ':') {
    throw ParseError("malformed RFC 3339 timestamp '" + std::string(s) + "'");
  }
  const int year = std::stoi(std::string(s.substr(0, 4)));
  const int month = two_digits(s, 5);
  const int day = two_digits(s, 8);
  const int hour = two_digits(s, 11);
  const int minute = two_digits(s, 14);
  const int second = two_digits(s, 17);
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
    throw ParseError("out-of-range RFC 3339 timestamp '" + std::string(s) + "'");
  }
  std::size_t pos = 19;
  double frac = 0.0;
  if (pos < s.size() && s[pos] == '.') {
    std::size_t end = pos + 1;
    while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
    if (end == pos + 1) throw ParseError("malformed fractional seconds in '" + std::string(s) + "'");
    frac = csv::parse_double(std::string("0") + std::string(s.substr(pos, end - pos)), 0, "fraction");
    pos = end;
  }
  int offset = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z') && pos + 1 == s.size()) {
    offset = 0;
  } else if (pos + 6 == s.size() && (s[pos] == '+' || s[pos] == '-') && s[pos + 3] == ':') {
    const int sign = s[pos] == '+' ? 1 : -1;
    offset = sign * (two_digits(s, pos + 1) * 3600 + two_digits(s, pos + 4) * 60);
  } else {
    throw ParseError("missing or malformed UTC offset in '" + std::string(s) + "'");
  }
  const std::int64_t days =
      days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  const auto whole = days * 86400 + hour * 3600 + minute * 60 + second - offset;
  return static_cast<double>(whole) + frac;
}

ParseResult parse_voyages(std::istream& in, const ParseOptions& options) {
  const auto table = csv::read(in);
  const auto c_id = table.require("voyage_id");
  const auto c_time = table.require("timestamp");
  const auto c_lat = table.require("lat");
  const auto c_lon = table.require("lon");
  const auto c_fuel = table.column("fuel_rate");
  const auto c_speed = table.column("speed");

  ParseResult result;
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<RawPoint>> groups;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    try {
      if (row.fields.size() != table.header.size()) {
        throw ParseError("expected " + std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(row.fields.size()) + " on line " +
                             std::to_string(row.line),
                         row.line);
      }
      const auto& id = row.fields[c_id];
      if (id.empty()) throw ParseError("empty voyage_id on line " + std::to_string(row.line), row.line);
      RawPoint raw{};
      raw.order = r;
      raw.time = parse_timestamp(row.fields[c_time], row.line);
      if (!std::isfinite(raw.time)) {
        throw ParseError("non-finite timestamp on line " + std::to_string(row.line), row.line);
      }
      raw.point.position = {csv::parse_double(row.fields[c_lat], row.line, "lat"),
                            csv::parse_double(row.fields[c_lon], row.line, "lon")};
      if (!is_valid(raw.point.position)) {
        throw ParseError("position out of range on line " + std::to_string(row.line), row.line);
      }
      if (c_fuel && !row.fields[*c_fuel].empty()) {
        raw.point.fuel_rate = csv::parse_double(row.fields[*c_fuel], row.line, "fuel_rate");
      }
      if (c_speed && !row.fields[*c_speed].empty()) {
        raw.point.speed = csv::parse_double(row.fields[*c_speed], row.line, "speed");
      }
      auto [it, inserted] = groups.try_emplace(id);
      if (inserted) order.push_back(id);
      it->second.push_back(raw);
    } catch (const ParseError&) {
      if (!options.lenient) throw;
      ++result.skipped_rows;
    }
  }

  for (const auto& id : order) {
    auto& raws = groups[id];
    std::stable_sort(raws.begin(), raws.end(), [](const RawPoint& a, const RawPoint& b) {
      return a.time < b.time;
    });
    Voyage v;
    v.id = id;
    for (const auto& raw : raws) {
      const auto second = static_cast<std::int64_t>(std::floor(raw.time));
      if (!v.points.empty() && v.points.back().time == second) {
        ++result.duplicate_rows;
        continue;
      }
      TrackPoint p = raw.point;
      p.time = second;
      v.points.push_back(p);
    }
    if (v.points.size() < 2) {
      ++result.dropped_voyages;
      continue;
    }
    result.voyages.push_back(std::move(v));
  }
  return result;
}

ParseResult parse_voyages_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_voyages(in, options);
}

void write_voyages(std::ostream& out, std::span<const Voyage> voyages) {
  const bool fuel = std::any_of(voyages.begin(), voyages.end(), [](const Voyage& v) {
    return std::any_of(v.points.begin(), v.points.end(), [](const auto& p) { return p.fuel_rate.has_value(); });
  });
  const bool speed = std::any_of(voyages.begin(), voyages.end(), [](const Voyage& v) {
    return std::any_of(v.points.begin(), v.points.end(), [](const auto& p) { return p.speed.has_value(); });
  });
  out << "voyage_id,timestamp,lat,lon";
  if (fuel || speed) out << ",fuel_rate,speed";
  out << '\n';
  for (const auto& v : voyages) {
    const auto id = csv::escape(v.id);
    for (const auto& p : v.points) {
      out << id << ',' << p.time << ',' << csv::format_shortest(p.position.lat) << ','
          << csv::format_shortest(p.position.lon);
      if (fuel || speed) {
        out << ',';
        if (p.fuel_rate) out << csv::format_shortest(*p.fuel_rate);
        out << ',';
        if (p.speed) out << csv::format_shortest(*p.speed);
      }
      out << '\n';
    }
  }
}

std::map<std::string, std::string> read_labels(std::istream& in) {
  const auto table = csv::read(in);
  const auto c_id = table.require("voyage_id");
  const auto c_label = table.require("class_label");
  std::map<std::string, std::string> labels;
  for (const auto& row : table.rows) {
    if (row.fields.size() != table.header.size()) {
      throw ParseError("wrong field count on line " + std::to_string(row.line), row.line);
    }
    if (row.fields[c_label].empty()) {
      throw ParseError("empty class_label on line " + std::to_string(row.line), row.line);
    }
    if (!labels.emplace(row.fields[c_id], row.fields[c_label]).second) {
      throw ParseError("duplicate voyage_id '" + row.fields[c_id] + "' on line " +
                           std::to_string(row.line),
                       row.line);
    }
  }
  return labels;
}

std::map<std::string, std::string> read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_labels(in);
}

void write_labels(std::ostream& out, std::span<const LabeledVoyage> voyages) {
  out << "voyage_id,class_label\n";
  for (const auto& lv : voyages) {
    out << csv::escape(lv.voyage.id) << ',' << csv::escape(lv.class_label) << '\n';
  }
}

std::vector<LabeledVoyage> attach_labels(std::span<const Voyage> voyages,
                                         const std::map<std::string, std::string>& labels) {
  std::vector<LabeledVoyage> out;
  out.reserve(voyages.size());
  for (const auto& v : voyages) {
    const auto it = labels.find(v.id);
    if (it == labels.end()) throw InputError("voyage '" + v.id + "' has no class label");
    out.push_back({v, it->second});
  }
  return out;
}

double track_length(const Voyage& v) {
  double total = 0.0;
  for (std::size_t i = 1; i < v.points.size(); ++i) {
    total += haversine_distance(v.points[i - 1].position, v.points[i].position);
  }
  return total;
}

std::optional<double> fuel_used(const Voyage& v) {
  if (!v.has_fuel()) return std::nullopt;
  double liters = 0.0;
  for (std::size_t i = 1; i < v.points.size(); ++i) {
    const double hours = static_cast<double>(v.points[i].time - v.points[i - 1].time) / 3600.0;
    liters += 0.5 * (*v.points[i - 1].fuel_rate + *v.points[i].fuel_rate) * hours;
  }
  return liters;
}

std::vector<ClassSummary> class_statistics(std::span<const LabeledVoyage> voyages) {
  struct Acc {
    std::size_t n = 0;
    std::size_t n_fuel = 0;
    double fuel = 0.0;
    double duration = 0.0;
    double distance = 0.0;
    double speed = 0.0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& lv : voyages) {
    const auto& v = lv.voyage;
    validate(v);
    auto& a = acc[lv.class_label];
    const auto duration = static_cast<double>(v.points.back().time - v.points.front().time);
    const double distance = track_length(v);
    ++a.n;
    a.duration += duration;
    a.distance += distance;
    a.speed += distance / duration;
    if (auto f = fuel_used(v)) {
      ++a.n_fuel;
      a.fuel += *f;
    }
  }
  std::vector<ClassSummary> out;
  for (const auto& [label, a] : acc) {
    ClassSummary s;
    s.class_label = label;
    s.voyage_count = a.n;
    const auto n = static_cast<double>(a.n);
    s.mean_duration = a.duration / n;
    s.mean_distance = a.distance / n;
    s.mean_speed = a.speed / n;
    if (a.n_fuel > 0) s.mean_fuel = a.fuel / static_cast<double>(a.n_fuel);
    out.push_back(std::move(s));
  }
  return out;
}

void write_statistics(std::ostream& out, std::span<const ClassSummary> stats) {
  out << "class_label,voyage_count,mean_fuel,mean_duration,mean_distance,mean_speed\n";
  for (const auto& s : stats) {
    out << csv::escape(s.class_label) << ',' << s.voyage_count << ',';
    if (s.mean_fuel) out << csv::format_fixed(*s.mean_fuel, 3);
    out << ',' << csv::format_fixed(s.mean_duration, 3) << ',' << csv::format_fixed(s.mean_distance, 3)
        << ',' << csv::format_fixed(s.mean_speed, 6) << '\n';
  }
}

} // namespace vpath
