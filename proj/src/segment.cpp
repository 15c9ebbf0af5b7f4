#include "vpath/segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vpath/csv.hpp"
#include "vpath/error.hpp"

namespace vpath {

double SegmentScheme::axis_coordinate(const LocalPoint& p) const noexcept {
  return (p.x - axis_origin.x) * axis_direction.x + (p.y - axis_origin.y) * axis_direction.y;
}

std::optional<std::size_t> SegmentScheme::segment_of(double t) const noexcept {
  if (boundaries.size() < 2 || !(t >= boundaries.front()) || !(t <= boundaries.back())) return std::nullopt;
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
  const auto idx = static_cast<std::size_t>(it - boundaries.begin());
  return std::min(idx == 0 ? 0 : idx - 1, segments() - 1);
}

namespace {

bool point_less(const LocalPoint& a, const LocalPoint& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

LocalPoint mean_of(const std::vector<LocalPoint>& pts) {
  double x = 0.0, y = 0.0;
  for (const auto& p : pts) {
    x += p.x;
    y += p.y;
  }
  const auto n = static_cast<double>(pts.size());
  return {x / n, y / n};
}

} // namespace

std::pair<LocalPoint, LocalPoint> find_ports(std::span<const Voyage> voyages, const Projection& proj) {
  std::vector<LocalPoint> ends;
  for (const auto& v : voyages) {
    if (v.points.empty()) continue;
    ends.push_back(project(v.points.front().position, proj));
    ends.push_back(project(v.points.back().position, proj));
  }
  if (ends.size() < 2) throw SchemeError("no voyage endpoints to locate ports");
  // Canonical order makes the result independent of voyage order and direction.
  std::sort(ends.begin(), ends.end(), point_less);

  const LocalPoint centre = mean_of(ends);
  auto farthest = [&](const LocalPoint& from) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ends.size(); ++i) {
      if (squared_distance(ends[i], from) > squared_distance(ends[best], from)) best = i;
    }
    return ends[best];
  };
  LocalPoint a = farthest(centre);
  LocalPoint b = farthest(a);
  std::vector<int> side(ends.size(), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    std::vector<LocalPoint> ga, gb;
    for (std::size_t i = 0; i < ends.size(); ++i) {
      const int s = squared_distance(ends[i], a) <= squared_distance(ends[i], b) ? 0 : 1;
      changed |= s != side[i];
      side[i] = s;
      (s == 0 ? ga : gb).push_back(ends[i]);
    }
    if (ga.empty() || gb.empty()) throw SchemeError("voyage endpoints form a single port");
    a = mean_of(ga);
    b = mean_of(gb);
    if (!changed) break;
  }
  if (point_less(b, a)) std::swap(a, b);
  return {a, b};
}

SegmentScheme build_scheme(std::span<const Voyage> train, std::size_t segments, const Projection& proj) {
  if (segments < 2) throw ParameterError("segment count must be at least 2");
  if (train.empty()) throw PreconditionError("no training voyages");
  const auto [west, east] = find_ports(train, proj);
  const double len = euclidean_distance(west, east);
  if (!(len >= 1.0)) throw SchemeError("ports coincide; cannot define a route axis");

  SegmentScheme scheme;
  scheme.axis_origin = west;
  scheme.axis_direction = {(east.x - west.x) / len, (east.y - west.y) / len};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& v : train) {
    for (const auto& p : v.points) {
      const double t = scheme.axis_coordinate(project(p.position, proj));
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (!(hi > lo)) throw SchemeError("training points have no extent along the route axis");
  const auto s = static_cast<double>(segments);
  for (std::size_t i = 0; i <= segments; ++i) {
    scheme.boundaries.push_back(i == segments ? hi : lo + (hi - lo) * (static_cast<double>(i) / s));
  }
  return scheme;
}

namespace {

std::vector<std::vector<LocalPoint>> bucket_points(const Voyage& v, const SegmentScheme& scheme, const Projection& proj,
                                                   std::size_t* outside) {
  std::vector<std::vector<LocalPoint>> buckets(scheme.segments());
  for (const auto& p : v.points) {
    const auto local = project(p.position, proj);
    if (const auto s = scheme.segment_of(scheme.axis_coordinate(local))) {
      buckets[*s].push_back(local);
    } else if (outside) {
      ++*outside;
    }
  }
  return buckets;
}

FeatureMatrix to_matrix(const std::vector<LocalPoint>& pts) {
  FeatureMatrix x(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = pts[i].x;
    x(static_cast<Eigen::Index>(i), 1) = pts[i].y;
  }
  return x;
}

} // namespace

SegmentModels fit_segment_models(std::span<const Voyage> train, const SegmentScheme& scheme, const Projection& proj,
                                 std::size_t components, std::uint64_t seed, const SegmentFitOptions& options) {
  if (components < 1) throw ParameterError("components per segment must be at least 1");
  const auto count = scheme.segments();
  if (count < 2) throw SchemeError("scheme must have at least 2 segments");
  std::vector<std::vector<LocalPoint>> points(count);
  for (const auto& v : train) {
    auto b = bucket_points(v, scheme, proj, nullptr);
    for (std::size_t s = 0; s < count; ++s) points[s].insert(points[s].end(), b[s].begin(), b[s].end());
  }
  const auto need = components * options.min_points_per_component;
  for (std::size_t s = 0; s < count; ++s) {
    if (points[s].size() < need) {
      throw CoverageError("segment " + std::to_string(s + 1) + " has " + std::to_string(points[s].size()) +
                              " training points; at least " + std::to_string(need) + " required",
                          s);
    }
  }

  SegmentModels out;
  out.projection = proj;
  out.scheme = scheme;
  out.components = components;
  out.models.resize(count);
  GmmOptions gmm = options.gmm;
  gmm.threads = 1;
  int threads = options.threads;
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#endif
  std::vector<std::string> failures(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t s = 0; s < count; ++s) {
    try {
      out.models[s] = gmm_fit(to_matrix(points[s]), components, derive_seed(seed, s), gmm);
    } catch (const std::exception& e) {
      failures[s] = "segment " + std::to_string(s + 1) + ": " + e.what();
    }
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw FitError(f);
  }
  return out;
}

PathSignature signature(const Voyage& v, const SegmentModels& models) {
  PathSignature sig;
  sig.voyage_id = v.id;
  const auto buckets = bucket_points(v, models.scheme, models.projection, &sig.outside_points);
  for (std::size_t s = 0; s < buckets.size(); ++s) {
    if (buckets[s].empty()) {
      sig.assignments.push_back(kAbsent);
      sig.mean_loglik.emplace_back();
      continue;
    }
    Eigen::MatrixXd resp;
    const Eigen::VectorXd ll = MixtureEvaluator(models.models[s]).log_likelihood(to_matrix(buckets[s]), &resp);
    const Eigen::VectorXd mean_resp = resp.colwise().mean().transpose();
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < mean_resp.size(); ++c) {
      if (mean_resp(c) > mean_resp(best)) best = c;
    }
    sig.assignments.push_back(static_cast<int>(best));
    sig.mean_loglik.emplace_back(ll.mean());
  }
  return sig;
}

SignatureKey signature_key(const PathSignature& s, const SignatureMap& map) {
  SignatureKey key;
  for (auto seg : map.discriminative) key.push_back(s.assignments.at(seg));
  return key;
}

SignatureMap learn_signature_map(std::span<const PathSignature> signatures, std::span<const std::string> labels,
                                 double floor_sigmas) {
  if (signatures.size() != labels.size()) throw InputError("signature and label counts differ");
  if (signatures.empty()) throw PreconditionError("no training signatures");
  const auto segments = signatures.front().assignments.size();
  for (const auto& s : signatures) {
    if (s.assignments.size() != segments) throw InputError("signatures have different segment counts");
  }
  SignatureMap map;
  map.labels.assign(labels.begin(), labels.end());
  std::sort(map.labels.begin(), map.labels.end());
  map.labels.erase(std::unique(map.labels.begin(), map.labels.end()), map.labels.end());

  for (std::size_t seg = 0; seg < segments; ++seg) {
    std::optional<int> shared;
    bool differs = false;
    for (const auto& label : map.labels) {
      std::map<int, std::size_t> votes;
      for (std::size_t i = 0; i < signatures.size(); ++i) {
        if (labels[i] == label) ++votes[signatures[i].assignments[seg]];
      }
      int mode = votes.begin()->first;
      for (const auto& [a, n] : votes) {
        if (n > votes[mode]) mode = a;
      }
      if (shared && *shared != mode) differs = true;
      shared = mode;
    }
    if (differs) map.discriminative.push_back(seg);
  }

  std::map<SignatureKey, std::map<std::string, std::size_t>> votes;
  for (std::size_t i = 0; i < signatures.size(); ++i) ++votes[signature_key(signatures[i], map)][labels[i]];
  for (const auto& [key, tally] : votes) {
    std::string best;
    std::size_t best_n = 0;
    bool tie = false;
    for (const auto& [label, n] : tally) {
      if (n > best_n) {
        best = label;
        best_n = n;
        tie = false;
      } else if (n == best_n) {
        tie = true;
      }
    }
    if (tie) {
      std::string text;
      for (auto k : key) text += (text.empty() ? "" : ",") + std::to_string(k);
      throw MappingError("signature key (" + text + ") has no majority class");
    }
    map.entries[key] = best;
  }

  map.floors.resize(segments);
  for (std::size_t seg = 0; seg < segments; ++seg) {
    std::vector<double> v;
    for (const auto& s : signatures) {
      if (s.mean_loglik[seg]) v.push_back(*s.mean_loglik[seg]);
    }
    if (v.empty()) continue;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(v.size()));
    map.floors[seg] = *std::min_element(v.begin(), v.end()) - floor_sigmas * sd;
  }
  return map;
}

Classification classify_signature(const PathSignature& sig, const SignatureMap& map) {
  Classification out;
  out.voyage_id = sig.voyage_id;
  out.signature = sig;
  const auto key = signature_key(sig, map);
  if (std::all_of(key.begin(), key.end(), [](int a) { return a == kAbsent; })) {
    throw UnclassifiableError("voyage '" + sig.voyage_id + "' has no points in any discriminative segment");
  }

  auto rank = [&](const std::string& label) {
    return std::lower_bound(map.labels.begin(), map.labels.end(), label) - map.labels.begin();
  };
  if (const auto it = map.entries.find(key); it != map.entries.end()) {
    out.label = it->second;
    out.exact = true;
  } else {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& [candidate, label] : map.entries) {
      std::size_t d = 0;
      for (std::size_t i = 0; i < key.size(); ++i) {
        if (key[i] != kAbsent && key[i] != candidate[i]) ++d;
      }
      if (d < best || (d == best && rank(label) < rank(out.label))) {
        best = d;
        out.label = label;
      }
    }
    out.hamming = best;
  }

  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t seg = 0; seg < sig.mean_loglik.size(); ++seg) {
    if (!sig.mean_loglik[seg]) continue;
    total += *sig.mean_loglik[seg];
    ++present;
    if (seg < map.floors.size() && map.floors[seg] && *sig.mean_loglik[seg] < *map.floors[seg]) {
      out.below_floor.push_back(seg);
    }
  }
  out.confidence = present ? total / static_cast<double>(present) : 0.0;
  out.novel = !out.exact || !out.below_floor.empty();
  return out;
}

Classification classify_voyage(const Voyage& v, const SegmentModels& models, const SignatureMap& map) {
  return classify_signature(signature(v, models), map);
}

void write_classifications(std::ostream& out, std::span<const Classification> results, std::size_t segments) {
  out << "voyage_id,class_label,novel,exact,hamming,confidence,signature";
  for (std::size_t s = 0; s < segments; ++s) out << ",seg" << (s + 1) << "_loglik";
  out << '\n';
  for (const auto& r : results) {
    std::string sig;
    for (auto a : r.signature.assignments) {
      if (!sig.empty()) sig += '|';
      sig += a == kAbsent ? std::string("-") : std::to_string(a);
    }
    out << csv::escape(r.voyage_id) << ',' << csv::escape(r.label) << ',' << (r.novel ? 1 : 0) << ','
        << (r.exact ? 1 : 0) << ',' << r.hamming << ',' << csv::format_fixed(r.confidence, 6) << ',' << sig;
    for (std::size_t s = 0; s < segments; ++s) {
      out << ',';
      if (s < r.signature.mean_loglik.size() && r.signature.mean_loglik[s]) {
        out << csv::format_fixed(*r.signature.mean_loglik[s], 6);
      }
    }
    out << '\n';
  }
}

namespace {

constexpr const char* kModelFormat = "vpath-segment-model/1";

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

} // namespace

void write_model_json(std::ostream& out, const SegmentModelFile& file) {
  const auto& m = file.models;
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["projection"] = {{"origin", {m.projection.origin.lat, m.projection.origin.lon}},
                     {"meters_per_deg_lat", m.projection.meters_per_deg_lat},
                     {"meters_per_deg_lon", m.projection.meters_per_deg_lon}};
  j["scheme"] = {{"axis_origin", {m.scheme.axis_origin.x, m.scheme.axis_origin.y}},
                 {"axis_direction", {m.scheme.axis_direction.x, m.scheme.axis_direction.y}},
                 {"boundaries", m.scheme.boundaries}};
  j["components"] = m.components;
  auto& segs = j["segments"] = nlohmann::ordered_json::array();
  for (const auto& g : m.models) {
    auto comps = nlohmann::ordered_json::array();
    for (const auto& c : g.components) {
      comps.push_back({{"weight", c.weight},
                       {"mean", std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size())},
                       {"covariance", matrix_json(c.covariance)}});
    }
    segs.push_back({{"components", comps}});
  }
  const auto& map = file.map;
  auto floors = nlohmann::ordered_json::array();
  for (const auto& f : map.floors) floors.push_back(f ? nlohmann::ordered_json(*f) : nlohmann::ordered_json());
  auto entries = nlohmann::ordered_json::array();
  for (const auto& [key, label] : map.entries) entries.push_back({{"key", key}, {"label", label}});
  j["signature_map"] = {{"labels", map.labels},
                        {"discriminative_segments", map.discriminative},
                        {"floors", floors},
                        {"entries", entries}};
  out << j.dump(2) << '\n';
}

SegmentModelFile read_model_json(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != kModelFormat) {
      throw SchemaError("unsupported model format '" + j.value("format", std::string()) + "'");
    }
    SegmentModelFile f;
    auto& m = f.models;
    const auto& p = j.at("projection");
    m.projection.origin = {p.at("origin").at(0).get<double>(), p.at("origin").at(1).get<double>()};
    m.projection.meters_per_deg_lat = p.at("meters_per_deg_lat").get<double>();
    m.projection.meters_per_deg_lon = p.at("meters_per_deg_lon").get<double>();
    const auto& s = j.at("scheme");
    m.scheme.axis_origin = {s.at("axis_origin").at(0).get<double>(), s.at("axis_origin").at(1).get<double>()};
    m.scheme.axis_direction = {s.at("axis_direction").at(0).get<double>(), s.at("axis_direction").at(1).get<double>()};
    m.scheme.boundaries = s.at("boundaries").get<std::vector<double>>();
    m.components = j.at("components").get<std::size_t>();
    for (const auto& seg : j.at("segments")) {
      GaussianMixture g;
      for (const auto& c : seg.at("components")) {
        GaussianComponent comp;
        comp.weight = c.at("weight").get<double>();
        const auto mean = c.at("mean").get<std::vector<double>>();
        comp.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        const auto cov = c.at("covariance").get<std::vector<std::vector<double>>>();
        comp.covariance.resize(static_cast<Eigen::Index>(cov.size()), static_cast<Eigen::Index>(cov.size()));
        for (std::size_t r = 0; r < cov.size(); ++r) {
          if (cov[r].size() != cov.size()) throw SchemaError("covariance must be square");
          for (std::size_t q = 0; q < cov.size(); ++q) {
            comp.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = cov[r][q];
          }
        }
        g.components.push_back(std::move(comp));
      }
      validate(g);
      m.models.push_back(std::move(g));
    }
    if (m.models.size() != m.scheme.segments()) throw SchemaError("model count does not match segment count");
    const auto& sm = j.at("signature_map");
    f.map.labels = sm.at("labels").get<std::vector<std::string>>();
    f.map.discriminative = sm.at("discriminative_segments").get<std::vector<std::size_t>>();
    for (const auto& fl : sm.at("floors")) {
      f.map.floors.push_back(fl.is_null() ? std::optional<double>() : std::optional<double>(fl.get<double>()));
    }
    for (const auto& e : sm.at("entries")) f.map.entries[e.at("key").get<SignatureKey>()] = e.at("label").get<std::string>();
    for (auto seg : f.map.discriminative) {
      if (seg >= m.scheme.segments()) throw SchemaError("discriminative segment out of range");
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid model JSON: ") + e.what());
  }
}

} // namespace vpath
