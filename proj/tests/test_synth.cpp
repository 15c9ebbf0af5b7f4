#include <doctest.h>

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

#include "support.hpp"
#include "vpath/annd.hpp"
#include "vpath/error.hpp"
#include "vpath/hierarchical.hpp"
#include "vpath/ingest.hpp"
#include "vpath/synth.hpp"

using namespace vpath;

namespace {

std::vector<LocalPoint> local_centerline(const RouteArchetype& a) {
  const auto proj = make_projection(default_origin());
  std::vector<LocalPoint> out;
  for (const auto& g : a.centerline) out.push_back(project(g, proj));
  return out;
}

double point_segment_distance(const LocalPoint& p, const LocalPoint& a, const LocalPoint& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  return euclidean_distance(p, {a.x + t * dx, a.y + t * dy});
}

double distance_to_polyline(const LocalPoint& p, const std::vector<LocalPoint>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) best = std::min(best, point_segment_distance(p, poly[i], poly[i + 1]));
  return best;
}

const RouteArchetype& archetype(const GeneratorConfig& c, const std::string& label) {
  return *std::find_if(c.archetypes.begin(), c.archetypes.end(), [&](const auto& a) { return a.class_label == label; });
}

struct Separation {
  double max_intra_excluding_s = 0.0;
  double min_inter_excluding_hard_pair = std::numeric_limits<double>::infinity();
  double hard_pair_mean = 0.0;
  double s_top_merge = 0.0;
};

Separation separation(const std::vector<LabeledVoyage>& labeled, const DistanceMatrix& m) {
  Separation s;
  double hard = 0.0;
  int n_hard = 0;
  DistanceMatrix south;
  std::vector<std::size_t> s_idx;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto& a = labeled[i].class_label;
    if (a == "S") s_idx.push_back(i);
    for (std::size_t j = i + 1; j < labeled.size(); ++j) {
      const auto& b = labeled[j].class_label;
      const double d = m.at(i, j);
      if (a == b) {
        if (a != "S") s.max_intra_excluding_s = std::max(s.max_intra_excluding_s, d);
      } else if ((a == "NE" && b == "NM") || (a == "NM" && b == "NE")) {
        hard += d;
        ++n_hard;
      } else {
        s.min_inter_excluding_hard_pair = std::min(s.min_inter_excluding_hard_pair, d);
      }
    }
  }
  s.hard_pair_mean = hard / n_hard;
  for (auto i : s_idx) south.ids.push_back(m.ids[i]);
  for (auto i : s_idx)
    for (auto j : s_idx) south.values.push_back(m.at(i, j));
  s.s_top_merge = build_dendrogram(south, Linkage::Average).merges.back().height;
  return s;
}

} // namespace

TEST_CASE("default configuration") {
  const auto c = default_config();
  validate(c);
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (std::size_t i = 0; i < c.archetypes.size(); ++i) {
    counts[c.archetypes[i].class_label] = c.counts[i];
    total += c.counts[i];
    CHECK(c.archetypes[i].nominal_speed == 4.2);
    CHECK(c.archetypes[i].lateral_sigma == 10.0);
    CHECK(c.archetypes[i].centerline.front() == c.archetypes[0].centerline.front());
    CHECK(c.archetypes[i].centerline.back() == c.archetypes[0].centerline.back());
  }
  CHECK(total == 124);
  CHECK(counts == std::map<std::string, std::size_t>{{"NE", 14}, {"NM", 40}, {"NW", 16}, {"S", 52}, {"SW", 2}});
  CHECK(c.sample_period == 1.0);
  CHECK(c.gps_noise_sigma == 5.0);
}

TEST_CASE("NE branch runs 60 m from NM along its parallel stretch") {
  const auto c = default_config();
  const auto ne = local_centerline(archetype(c, "NE"));
  const auto nm = local_centerline(archetype(c, "NM"));
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double x = 2600.0; x <= 3000.0; x += 10.0) {
    const double d = distance_to_polyline({x, 360.0}, nm);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
    CHECK(distance_to_polyline({x, 360.0}, ne) == doctest::Approx(0.0).scale(1).epsilon(1e-6));
  }
  CHECK(lo == doctest::Approx(60.0).epsilon(1e-6));
  CHECK(hi == doctest::Approx(60.0).epsilon(1e-6));
}

TEST_CASE("noiseless voyages lie on the centerline at nominal speed") {
  auto c = default_config();
  c.gps_noise_sigma = 0.0;
  for (auto& a : c.archetypes) {
    a.lateral_sigma = 0.0;
    a.lane_spread = 0.0;
  }
  c.counts = {1, 1, 1, 1, 1};
  const auto labeled = generate(c);
  const auto proj = make_projection(default_origin());
  for (const auto& l : labeled) {
    const auto line = local_centerline(archetype(c, l.class_label));
    for (const auto& p : l.voyage.points) CHECK(distance_to_polyline(project(p.position, proj), line) < 1e-6);
  }
  for (const auto& s : class_statistics(labeled)) CHECK(s.mean_speed == doctest::Approx(4.2).epsilon(0.05));
}

TEST_CASE("generated voyages are valid, counted and deterministic") {
  const auto c = default_config();
  const auto a = generate(c);
  const auto b = generate(c);
  REQUIRE(a.size() == 124);
  CHECK(a.front().voyage.id == "V001");
  CHECK(a.back().voyage.id == "V124");
  std::map<std::string, std::size_t> counts;
  double speed = 0.0;
  std::size_t n = 0;
  for (const auto& l : a) {
    validate(l.voyage);
    ++counts[l.class_label];
    for (std::size_t i = 1; i < l.voyage.points.size(); ++i) CHECK(l.voyage.points[i].time - l.voyage.points[i - 1].time == 1);
    for (const auto& p : l.voyage.points) speed += *p.speed, ++n;
  }
  CHECK(counts.at("SW") == 2);
  CHECK(speed / static_cast<double>(n) == doctest::Approx(4.2).epsilon(0.05));

  std::vector<Voyage> va, vb;
  for (const auto& l : a) va.push_back(l.voyage);
  for (const auto& l : b) vb.push_back(l.voyage);
  std::ostringstream oa, ob;
  write_voyages(oa, va);
  write_voyages(ob, vb);
  CHECK(oa.str() == ob.str());

  auto other = c;
  other.seed = 2;
  std::vector<Voyage> vc;
  for (const auto& l : generate(other)) vc.push_back(l.voyage);
  std::ostringstream oc;
  write_voyages(oc, vc);
  CHECK(oc.str() != oa.str());
}

TEST_CASE("class separations measured with the exhaustive oracle") {
  const auto labeled = generate(default_config());
  std::vector<Voyage> voyages;
  for (const auto& l : labeled) voyages.push_back(l.voyage);
  const auto m = distance_matrix_serial(make_paths(voyages));
  const auto s = separation(labeled, m);
  CHECK(s.max_intra_excluding_s < 40.0);
  CHECK(s.s_top_merge < 100.0);
  CHECK(s.min_inter_excluding_hard_pair > 120.0);
  CHECK(s.hard_pair_mean > 40.0);
  CHECK(s.hard_pair_mean < 120.0);
}

TEST_CASE("novel corridor voyages are far from every class") {
  const auto c = default_config();
  const auto novel = generate_novel(c, 5);
  REQUIRE(novel.size() == 5);
  CHECK(novel[0].id == "N001");
  CHECK(generate_novel(c, 0).empty());
  auto one = c;
  one.counts = {1, 1, 1, 1, 1};
  std::vector<Voyage> all;
  for (const auto& l : generate(one)) all.push_back(l.voyage);
  const std::size_t classes = all.size();
  all.insert(all.end(), novel.begin(), novel.end());
  const auto paths = make_paths(all);
  for (std::size_t i = classes; i < paths.size(); ++i)
    for (std::size_t k = 0; k < classes; ++k) CHECK(symmetric_annd(paths[i], paths[k]) > 150.0);
}

TEST_CASE("config JSON round trip and errors") {
  const auto c = default_config();
  std::stringstream s;
  write_config(s, c);
  const auto back = read_config(s);
  REQUIRE(back.archetypes.size() == c.archetypes.size());
  CHECK(back.counts == c.counts);
  CHECK(back.seed == c.seed);
  for (std::size_t i = 0; i < c.archetypes.size(); ++i) {
    CHECK(back.archetypes[i].class_label == c.archetypes[i].class_label);
    REQUIRE(back.archetypes[i].centerline.size() == c.archetypes[i].centerline.size());
    for (std::size_t k = 0; k < c.archetypes[i].centerline.size(); ++k) {
      CHECK(back.archetypes[i].centerline[k].lat == doctest::Approx(c.archetypes[i].centerline[k].lat).epsilon(1e-12));
    }
  }

  std::istringstream partial("{\"seed\": 9}");
  const auto p = read_config(partial);
  CHECK(p.seed == 9);
  CHECK(p.counts == c.counts);

  std::istringstream as_array("{\"counts\": [2, 3, 2, 3, 2]}");
  CHECK(read_config(as_array).counts == std::vector<std::size_t>{2, 3, 2, 3, 2});
  std::istringstream as_object("{\"counts\": {\"SW\": 4}}");
  const auto obj = read_config(as_object);
  CHECK(obj.counts.back() == 4);
  CHECK(obj.counts.front() == c.counts.front());
  std::istringstream unknown("{\"counts\": {\"XX\": 4}}");
  CHECK_THROWS_AS(read_config(unknown), SchemaError);
  std::istringstream short_array("{\"counts\": [1, 2]}");
  CHECK_THROWS_AS(read_config(short_array), SchemaError);

  std::istringstream malformed("{\n  \"seed\": 9,\n  oops\n}");
  try {
    read_config(malformed);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() > 0);
  }

  auto bad = c;
  bad.counts[0] = 0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = c;
  bad.sample_period = 0.5;
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("slow: separations hold across a 20-seed sweep") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = default_config();
    c.seed = seed;
    const auto labeled = generate(c);
    std::vector<Voyage> voyages;
    for (const auto& l : labeled) voyages.push_back(l.voyage);
    const auto m = distance_matrix(make_paths(voyages));
    const auto s = separation(labeled, m);
    INFO("seed " << seed);
    CHECK(s.max_intra_excluding_s < 40.0);
    CHECK(s.s_top_merge < 100.0);
    CHECK(s.min_inter_excluding_hard_pair > 120.0);
    CHECK(s.hard_pair_mean > 40.0);
    CHECK(s.hard_pair_mean < 120.0);
    CHECK(hierarchical_cluster(m, Linkage::Average, 100.0).assignment.k == 5);
  }
}
