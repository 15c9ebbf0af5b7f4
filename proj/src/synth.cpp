#include "vpath/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vpath/error.hpp"
#include "vpath/rng.hpp"

namespace vpath {

namespace {

constexpr std::uint64_t kClassStream = 0xC1A55ULL;
constexpr std::uint64_t kNovelStream = 0x40BE1ULL;

std::string voyage_id(char prefix, std::size_t index) {
  std::ostringstream s;
  s << prefix << std::setw(3) << std::setfill('0') << index;
  return s.str();
}

struct Polyline {
  std::vector<LocalPoint> points;
  std::vector<double> cumulative; // arc length at each vertex

  explicit Polyline(std::vector<LocalPoint> pts) : points(std::move(pts)) {
    cumulative.push_back(0.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
      cumulative.push_back(cumulative.back() + euclidean_distance(points[i - 1], points[i]));
    }
  }
  double length() const { return cumulative.back(); }

  LocalPoint at(double s) const {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    auto seg = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - cumulative.begin() - 1));
    seg = std::min(seg, points.size() - 2);
    const double len = cumulative[seg + 1] - cumulative[seg];
    const double t = len > 0.0 ? (s - cumulative[seg]) / len : 0.0;
    return {points[seg].x + (points[seg + 1].x - points[seg].x) * t,
            points[seg].y + (points[seg + 1].y - points[seg].y) * t};
  }
};

struct Walk {
  const RouteArchetype& archetype;
  const Projection& proj;
  const GeneratorConfig& config;
};

Voyage walk(const Walk& w, std::string id, double lane_quantile, std::int64_t start, std::uint64_t seed) {
  std::vector<LocalPoint> local;
  for (const auto& g : w.archetype.centerline) local.push_back(project(g, w.proj));
  const Polyline line(std::move(local));
  const LocalPoint west = line.points.front();
  const LocalPoint east = line.points.back();

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double step = w.archetype.nominal_speed * w.config.sample_period;
  const auto n = static_cast<std::size_t>(std::floor(line.length() / step)) + 1;
  const double sigma = w.archetype.lateral_sigma;
  const double a = std::exp(-w.config.sample_period / w.config.lateral_tau);
  const double innovation = std::sqrt(1.0 - a * a) * sigma;
  const double bias = (lane_quantile - 0.5) * w.archetype.lane_spread;

  Voyage v;
  v.id = std::move(id);
  double offset = sigma * normal(rng);
  for (std::size_t i = 0; i < n + (std::fmod(line.length(), step) > 0.0 ? 1 : 0); ++i) {
    const double s = std::min(static_cast<double>(i) * step, line.length());
    if (i > 0) offset = a * offset + innovation * normal(rng);
    LocalPoint p = line.at(s);
    const double to_port = std::min(euclidean_distance(p, west), euclidean_distance(p, east));
    const double taper = w.config.port_taper > 0.0 ? std::min(1.0, to_port / w.config.port_taper) : 1.0;
    p.y += (offset + bias) * taper;
    p.x += w.config.gps_noise_sigma * normal(rng);
    p.y += w.config.gps_noise_sigma * normal(rng);

    TrackPoint tp;
    tp.time = start + static_cast<std::int64_t>(std::llround(static_cast<double>(i) * w.config.sample_period));
    tp.position = unproject(p, w.proj);
    const double speed = w.archetype.nominal_speed * (1.0 + 0.02 * normal(rng));
    tp.speed = std::max(0.0, speed);
    // Cubic propeller law around 40 L/h at 4.2 m/s.
    tp.fuel_rate = 40.0 * std::pow(*tp.speed / 4.2, 3.0);
    v.points.push_back(tp);
  }
  return v;
}

std::vector<double> lane_quantiles(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> q(count);
  for (std::size_t i = 0; i < count; ++i) q[i] = (static_cast<double>(perm[i]) + unit(rng)) / static_cast<double>(count);
  return q;
}

Projection config_projection(const GeneratorConfig& config) {
  return make_projection(config.archetypes.front().centerline.front());
}

} // namespace

void validate(const GeneratorConfig& config) {
  if (config.archetypes.empty()) throw ValidationError("generator config has no archetypes");
  if (config.counts.size() != config.archetypes.size()) {
    throw ValidationError("counts must list one value per archetype");
  }
  if (!(config.sample_period >= 1.0)) throw ValidationError("sample_period must be at least 1 s");
  if (!(config.gps_noise_sigma >= 0.0)) throw ValidationError("gps_noise_sigma must be nonnegative");
  if (!(config.lateral_tau > 0.0)) throw ValidationError("lateral_tau must be positive");
  if (!(config.port_taper >= 0.0)) throw ValidationError("port_taper must be nonnegative");
  const auto& first = config.archetypes.front().centerline;
  for (std::size_t i = 0; i < config.archetypes.size(); ++i) {
    const auto& a = config.archetypes[i];
    const auto tag = "archetype '" + a.class_label + "'";
    if (a.class_label.empty()) throw ValidationError("archetype without class_label");
    if (config.counts[i] < 1) throw ValidationError(tag + ": count must be at least 1");
    if (a.centerline.size() < 2) throw ValidationError(tag + ": centerline needs at least 2 points");
    for (const auto& p : a.centerline) validate(p);
    if (first.size() >= 2 && (a.centerline.front() != first.front() || a.centerline.back() != first.back())) {
      throw ValidationError(tag + ": centerline endpoints must match the shared ports");
    }
    if (!(a.nominal_speed > 0.0)) throw ValidationError(tag + ": nominal_speed must be positive");
    if (!(a.lateral_sigma >= 0.0)) throw ValidationError(tag + ": lateral_sigma must be nonnegative");
    if (!(a.lane_spread >= 0.0)) throw ValidationError(tag + ": lane_spread must be nonnegative");
    for (std::size_t j = 0; j < i; ++j) {
      if (config.archetypes[j].class_label == a.class_label) throw ValidationError(tag + ": duplicate class label");
    }
  }
}

GeoPoint default_origin() { return {59.4, 18.35}; }

std::vector<GeoPoint> polyline_from_local(const std::vector<LocalPoint>& local, const GeoPoint& origin) {
  const auto proj = make_projection(origin);
  std::vector<GeoPoint> out;
  for (const auto& p : local) out.push_back(unproject(p, proj));
  return out;
}

GeneratorConfig default_config() {
  const auto origin = default_origin();
  auto lane = [&](std::string label, std::vector<LocalPoint> pts, double spread = 0.0) {
    RouteArchetype a;
    a.class_label = std::move(label);
    a.centerline = polyline_from_local(pts, origin);
    a.lane_spread = spread;
    return a;
  };
  GeneratorConfig c;
  // NE runs 60 m north of NM between x = 2550 and 3050 before climbing away.
  // Forks and merges sit just inside segment boundaries of an 8-way split.
  c.archetypes = {
      lane("NE", {{0, 0}, {400, 300}, {2450, 300}, {2550, 360}, {3050, 360}, {3150, 920}, {3700, 920}, {4000, 0}}),
      lane("NM", {{0, 0}, {400, 300}, {3600, 300}, {4000, 0}}),
      lane("NW", {{0, 0}, {400, 300}, {1100, 300}, {1300, 1300}, {2700, 1300}, {2900, 300}, {3600, 300}, {4000, 0}}),
      lane("S", {{0, 0}, {400, -300}, {3600, -300}, {4000, 0}}, 225.0),
      lane("SW", {{0, 0}, {400, -2400}, {1100, -2400}, {1300, -300}, {3600, -300}, {4000, 0}}),
  };
  c.counts = {14, 40, 16, 52, 2};
  return c;
}

std::vector<GeoPoint> novel_centerline() {
  return polyline_from_local(
      {{0, 0}, {400, 300}, {1000, 300}, {1400, 2200}, {2600, 2200}, {3000, 300}, {3600, 300}, {4000, 0}},
      default_origin());
}

std::vector<LabeledVoyage> generate(const GeneratorConfig& config) {
  validate(config);
  const auto proj = config_projection(config);
  std::vector<LabeledVoyage> out;
  std::size_t index = 0;
  for (std::size_t c = 0; c < config.archetypes.size(); ++c) {
    const auto& arch = config.archetypes[c];
    const auto q = lane_quantiles(config.counts[c], derive_seed(derive_seed(config.seed, kClassStream), c));
    for (std::size_t i = 0; i < config.counts[c]; ++i, ++index) {
      const auto start = config.start_time +
                         static_cast<std::int64_t>(std::llround(static_cast<double>(index) * config.departure_interval));
      LabeledVoyage lv;
      lv.voyage = walk({arch, proj, config}, voyage_id('V', index + 1), q[i], start, derive_seed(config.seed, index));
      lv.class_label = arch.class_label;
      out.push_back(std::move(lv));
    }
  }
  return out;
}

std::vector<Voyage> generate_novel(const GeneratorConfig& config, std::size_t count) {
  validate(config);
  const auto proj = config_projection(config);
  RouteArchetype arch = config.archetypes.front();
  arch.class_label = "NOVEL";
  arch.centerline = novel_centerline();
  arch.lane_spread = 0.0;
  // Anchor to the configured ports so custom configs still share endpoints.
  arch.centerline.front() = config.archetypes.front().centerline.front();
  arch.centerline.back() = config.archetypes.front().centerline.back();
  std::vector<Voyage> out;
  const auto stream = derive_seed(config.seed, kNovelStream);
  for (std::size_t i = 0; i < count; ++i) {
    const auto start = config.start_time + static_cast<std::int64_t>(std::llround(static_cast<double>(i) * config.departure_interval));
    out.push_back(walk({arch, proj, config}, voyage_id('N', i + 1), 0.5, start, derive_seed(stream, i)));
  }
  return out;
}

namespace {

GeneratorConfig from_json(const nlohmann::json& j) {
  auto c = default_config();
  if (!j.is_object()) throw SchemaError("generator config must be a JSON object");
  GeoPoint origin = default_origin();
  if (j.contains("origin")) {
    const auto& o = j.at("origin");
    origin = {o.at(0).get<double>(), o.at(1).get<double>()};
  }
  if (j.contains("archetypes")) {
    c.archetypes.clear();
    c.counts.clear();
    for (const auto& a : j.at("archetypes")) {
      RouteArchetype r;
      r.class_label = a.at("class_label").get<std::string>();
      if (a.contains("centerline")) {
        for (const auto& p : a.at("centerline")) r.centerline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      } else {
        std::vector<LocalPoint> local;
        for (const auto& p : a.at("centerline_m")) local.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        r.centerline = polyline_from_local(local, origin);
      }
      r.nominal_speed = a.value("nominal_speed", r.nominal_speed);
      r.lateral_sigma = a.value("lateral_sigma", r.lateral_sigma);
      r.lane_spread = a.value("lane_spread", r.lane_spread);
      c.archetypes.push_back(std::move(r));
      c.counts.push_back(a.value("count", std::size_t{1}));
    }
  }
  if (j.contains("counts")) {
    const auto& counts = j.at("counts");
    if (counts.is_array()) {
      if (counts.size() != c.archetypes.size()) throw SchemaError("counts array must list one value per archetype");
      for (std::size_t i = 0; i < c.archetypes.size(); ++i) c.counts[i] = counts[i].get<std::size_t>();
    } else if (counts.is_object()) {
      for (const auto& [label, n] : counts.items()) {
        const auto it = std::find_if(c.archetypes.begin(), c.archetypes.end(),
                                     [&](const auto& a) { return a.class_label == label; });
        if (it == c.archetypes.end()) throw SchemaError("counts names unknown class '" + label + "'");
        c.counts[static_cast<std::size_t>(it - c.archetypes.begin())] = n.get<std::size_t>();
      }
    } else {
      throw SchemaError("counts must be an object keyed by class label or an array");
    }
  }
  c.sample_period = j.value("sample_period", c.sample_period);
  c.gps_noise_sigma = j.value("gps_noise_sigma", c.gps_noise_sigma);
  c.seed = j.value("seed", c.seed);
  c.lateral_tau = j.value("lateral_tau", c.lateral_tau);
  c.port_taper = j.value("port_taper", c.port_taper);
  c.start_time = j.value("start_time", c.start_time);
  c.departure_interval = j.value("departure_interval", c.departure_interval);
  if (j.contains("lateral_sigma")) {
    for (auto& a : c.archetypes) a.lateral_sigma = j.at("lateral_sigma").get<double>();
  }
  validate(c);
  return c;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

} // namespace

GeneratorConfig read_config(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(std::string("malformed config JSON: ") + e.what(), line, col);
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid config: ") + e.what());
  }
}

GeneratorConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return read_config(in);
}

void write_config(std::ostream& out, const GeneratorConfig& config) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["sample_period"] = config.sample_period;
  j["gps_noise_sigma"] = config.gps_noise_sigma;
  j["lateral_tau"] = config.lateral_tau;
  j["port_taper"] = config.port_taper;
  j["start_time"] = config.start_time;
  j["departure_interval"] = config.departure_interval;
  auto& arr = j["archetypes"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < config.archetypes.size(); ++i) {
    const auto& a = config.archetypes[i];
    nlohmann::ordered_json line = nlohmann::ordered_json::array();
    for (const auto& p : a.centerline) line.push_back({p.lat, p.lon});
    arr.push_back({{"class_label", a.class_label},
                   {"count", config.counts[i]},
                   {"nominal_speed", a.nominal_speed},
                   {"lateral_sigma", a.lateral_sigma},
                   {"lane_spread", a.lane_spread},
                   {"centerline", line}});
  }
  out << j.dump(2) << '\n';
}

} // namespace vpath
