#include "vpath/hierarchical.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "vpath/error.hpp"

namespace vpath {

std::string_view to_string(Linkage linkage) noexcept {
  switch (linkage) {
  case Linkage::Single: return "single";
  case Linkage::Complete: return "complete";
  case Linkage::Average: return "average";
  }
  return "average";
}

Linkage parse_linkage(std::string_view name) {
  if (name == "single") return Linkage::Single;
  if (name == "complete") return Linkage::Complete;
  if (name == "average") return Linkage::Average;
  throw ParameterError("unknown linkage '" + std::string(name) + "' (single|complete|average)");
}

namespace {

struct Cluster {
  std::size_t node;
  std::size_t size;
  std::string key; // smallest leaf id
  bool active;
};

bool key_less(const Cluster& a1, const Cluster& b1, const Cluster& a2, const Cluster& b2) {
  const auto& lo1 = std::min(a1.key, b1.key);
  const auto& hi1 = std::max(a1.key, b1.key);
  const auto& lo2 = std::min(a2.key, b2.key);
  const auto& hi2 = std::max(a2.key, b2.key);
  return std::tie(lo1, hi1) < std::tie(lo2, hi2);
}

class DisjointSet {
public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

private:
  std::vector<std::size_t> parent_;
};

ClusterAssignment apply_merges(const Dendrogram& d, std::size_t count) {
  const auto m = d.ids.size();
  DisjointSet sets(m);
  std::vector<std::size_t> leaf_of(m + d.merges.size());
  std::iota(leaf_of.begin(), leaf_of.begin() + static_cast<std::ptrdiff_t>(m), 0);
  for (std::size_t i = 0; i < d.merges.size(); ++i) {
    const auto& mg = d.merges[i];
    leaf_of[m + i] = leaf_of[mg.left];
    if (i < count) sets.unite(leaf_of[mg.left], leaf_of[mg.right]);
  }
  std::vector<int> raw(m);
  for (std::size_t i = 0; i < m; ++i) raw[i] = static_cast<int>(sets.find(i));
  return canonical_assignment(d.ids, raw);
}

} // namespace

Dendrogram build_dendrogram(const DistanceMatrix& matrix, Linkage linkage) {
  validate(matrix);
  const auto m = matrix.size();
  if (m < 1) throw PreconditionError("cannot cluster an empty matrix");

  Dendrogram d;
  d.ids = matrix.ids;
  d.linkage = linkage;
  d.merges.reserve(m - 1);

  std::vector<double> dist = matrix.values;
  std::vector<Cluster> clusters(m);
  for (std::size_t i = 0; i < m; ++i) clusters[i] = {i, 1, matrix.ids[i], true};

  for (std::size_t step = 0; step + 1 < m; ++step) {
    std::size_t best_a = 0, best_b = 0;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t a = 0; a < m; ++a) {
      if (!clusters[a].active) continue;
      for (std::size_t b = a + 1; b < m; ++b) {
        if (!clusters[b].active) continue;
        const double h = dist[a * m + b];
        if (!found || h < best ||
            (h == best && key_less(clusters[a], clusters[b], clusters[best_a], clusters[best_b]))) {
          best = h;
          best_a = a;
          best_b = b;
          found = true;
        }
      }
    }
    auto& ca = clusters[best_a];
    auto& cb = clusters[best_b];
    const bool a_first = ca.key < cb.key;
    Merge merge;
    merge.left = a_first ? ca.node : cb.node;
    merge.right = a_first ? cb.node : ca.node;
    merge.height = best;
    merge.size = ca.size + cb.size;
    d.merges.push_back(merge);

    const auto na = static_cast<double>(ca.size);
    const auto nb = static_cast<double>(cb.size);
    for (std::size_t k = 0; k < m; ++k) {
      if (!clusters[k].active || k == best_a || k == best_b) continue;
      const double dak = dist[best_a * m + k];
      const double dbk = dist[best_b * m + k];
      double updated = 0.0;
      switch (linkage) {
      case Linkage::Single: updated = std::min(dak, dbk); break;
      case Linkage::Complete: updated = std::max(dak, dbk); break;
      case Linkage::Average: updated = (na * dak + nb * dbk) / (na + nb); break;
      }
      dist[best_a * m + k] = updated;
      dist[k * m + best_a] = updated;
    }
    ca.node = m + step;
    ca.size = merge.size;
    ca.key = std::min(ca.key, cb.key);
    cb.active = false;
  }
  return d;
}

ClusterAssignment cut_at_height(const Dendrogram& d, double cutoff) {
  if (!(cutoff > 0.0)) throw ParameterError("cutoff must be positive");
  // Heights are nondecreasing for all supported linkages.
  std::size_t count = 0;
  while (count < d.merges.size() && d.merges[count].height <= cutoff) ++count;
  return apply_merges(d, count);
}

ClusterAssignment cut_dendrogram(const Dendrogram& d, std::size_t k) {
  const auto m = d.ids.size();
  if (k < 1 || k > m) {
    throw ParameterError("k must be in [1, " + std::to_string(m) + "], got " + std::to_string(k));
  }
  return apply_merges(d, m - k);
}

HierarchicalResult hierarchical_cluster(const DistanceMatrix& matrix, Linkage linkage, double cutoff) {
  if (!(cutoff > 0.0)) throw ParameterError("cutoff must be positive");
  HierarchicalResult r;
  r.dendrogram = build_dendrogram(matrix, linkage);
  r.assignment = cut_at_height(r.dendrogram, cutoff);
  return r;
}

void write_dendrogram_json(std::ostream& out, const Dendrogram& d) {
  nlohmann::ordered_json j;
  j["format"] = "vpath-dendrogram/1";
  j["linkage"] = std::string(to_string(d.linkage));
  j["ids"] = d.ids;
  auto merges = nlohmann::ordered_json::array();
  for (const auto& m : d.merges) {
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  }
  j["merges"] = std::move(merges);
  out << j.dump(2) << '\n';
}

Dendrogram read_dendrogram_json(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("dendrogram JSON: ") + e.what());
  }
  if (j.value("format", "") != "vpath-dendrogram/1") throw SchemaError("not a vpath dendrogram");
  Dendrogram d;
  d.linkage = parse_linkage(j.at("linkage").get<std::string>());
  d.ids = j.at("ids").get<std::vector<std::string>>();
  for (const auto& m : j.at("merges")) {
    d.merges.push_back({m.at("left").get<std::size_t>(), m.at("right").get<std::size_t>(),
                        m.at("height").get<double>(), m.at("size").get<std::size_t>()});
  }
  if (!d.ids.empty() && d.merges.size() + 1 != d.ids.size()) {
    throw SchemaError("dendrogram must have ids - 1 merges");
  }
  return d;
}

} // namespace vpath
