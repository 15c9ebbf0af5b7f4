#include "vpath/annd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vpath/csv.hpp"
#include "vpath/error.hpp"

namespace vpath {

namespace {

constexpr std::size_t kLeafSize = 8;

void require_nonempty(const Path& p) {
  if (p.points.empty()) {
    throw PreconditionError("path '" + p.voyage_id + "' has no points");
  }
}

double coord(const LocalPoint& p, unsigned char dim) { return dim == 0 ? p.x : p.y; }

} // namespace

Path make_path(const Voyage& v, const Projection& proj) {
  Path path;
  path.voyage_id = v.id;
  path.points.reserve(v.points.size());
  for (const auto& tp : v.points) path.points.push_back(project(tp.position, proj));
  return path;
}

std::vector<Path> make_paths(std::span<const Voyage> voyages) {
  std::vector<GeoPoint> all;
  for (const auto& v : voyages) {
    for (const auto& tp : v.points) all.push_back(tp.position);
  }
  const auto proj = projection_for(all);
  std::vector<Path> paths;
  paths.reserve(voyages.size());
  for (const auto& v : voyages) paths.push_back(make_path(v, proj));
  return paths;
}

double nearest_neighbor_distance(const LocalPoint& p, const Path& path) {
  require_nonempty(path);
  double best2 = std::numeric_limits<double>::infinity();
  for (const auto& q : path.points) best2 = std::min(best2, squared_distance(p, q));
  return std::sqrt(best2);
}

NearestNeighborIndex::NearestNeighborIndex(std::span<const LocalPoint> points)
    : points_(points.begin(), points.end()), split_dim_(points.size(), 0), split_value_(points.size(), 0.0) {
  if (points_.empty()) throw PreconditionError("cannot index an empty path");
  build(0, points_.size());
}

void NearestNeighborIndex::build(std::size_t lo, std::size_t hi) {
  if (hi - lo <= kLeafSize) return;
  double min_x = points_[lo].x, max_x = min_x, min_y = points_[lo].y, max_y = min_y;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    min_x = std::min(min_x, points_[i].x);
    max_x = std::max(max_x, points_[i].x);
    min_y = std::min(min_y, points_[i].y);
    max_y = std::max(max_y, points_[i].y);
  }
  const unsigned char dim = (max_x - min_x) >= (max_y - min_y) ? 0 : 1;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(points_.begin() + static_cast<std::ptrdiff_t>(lo),
                   points_.begin() + static_cast<std::ptrdiff_t>(mid),
                   points_.begin() + static_cast<std::ptrdiff_t>(hi),
                   [dim](const LocalPoint& a, const LocalPoint& b) { return coord(a, dim) < coord(b, dim); });
  split_dim_[mid] = dim;
  split_value_[mid] = coord(points_[mid], dim);
  build(lo, mid);
  build(mid, hi);
}

void NearestNeighborIndex::search(std::size_t lo, std::size_t hi, const LocalPoint& q,
                                  double& best2) const {
  if (hi - lo <= kLeafSize) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double d2 = squared_distance(q, points_[i]);
      if (d2 < best2) best2 = d2;
    }
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  const unsigned char dim = split_dim_[mid];
  const double diff = coord(q, dim) - split_value_[mid];
  // Left range holds coordinates <= split, right range >= split.
  if (diff < 0.0) {
    search(lo, mid, q, best2);
    if (diff * diff < best2) search(mid, hi, q, best2);
  } else {
    search(mid, hi, q, best2);
    if (diff * diff < best2) search(lo, mid, q, best2);
  }
}

double NearestNeighborIndex::nearest_squared_within(const LocalPoint& q, double bound2) const {
  double best2 = bound2;
  search(0, points_.size(), q, best2);
  return best2;
}

double NearestNeighborIndex::nearest_distance(const LocalPoint& q) const {
  return std::sqrt(nearest_squared_within(q, std::numeric_limits<double>::infinity()));
}

double directed_annd(const Path& from, const NearestNeighborIndex& to) {
  require_nonempty(from);
  double sum = 0.0;
  double prev_dist = std::numeric_limits<double>::infinity();
  LocalPoint prev{};
  for (const auto& p : from.points) {
    // Consecutive points are close, so the previous answer bounds this one:
    // nn(p) <= |p - prev| + nn(prev). Inflate slightly so the true minimum is
    // always strictly inside the bound.
    double bound2 = std::numeric_limits<double>::infinity();
    if (std::isfinite(prev_dist)) {
      const double r = (prev_dist + euclidean_distance(p, prev)) * (1.0 + 1e-9) + 1e-9;
      bound2 = r * r;
    }
    double best2 = to.nearest_squared_within(p, bound2);
    if (best2 == bound2) best2 = to.nearest_squared_within(p, std::numeric_limits<double>::infinity());
    const double d = std::sqrt(best2);
    sum += d;
    prev = p;
    prev_dist = d;
  }
  return sum / static_cast<double>(from.points.size());
}

double directed_annd(const Path& from, const Path& to) {
  require_nonempty(to);
  return directed_annd(from, NearestNeighborIndex(to.points));
}

double directed_annd_exhaustive(const Path& from, const Path& to) {
  require_nonempty(from);
  require_nonempty(to);
  double sum = 0.0;
  for (const auto& p : from.points) sum += nearest_neighbor_distance(p, to);
  return sum / static_cast<double>(from.points.size());
}

double symmetric_annd(const Path& a, const Path& b) {
  return (directed_annd(a, b) + directed_annd(b, a)) / 2.0;
}

void validate(const DistanceMatrix& m) {
  const auto n = m.size();
  if (m.values.size() != n * n) throw ValidationError("distance matrix has wrong number of values");
  for (std::size_t i = 0; i < n; ++i) {
    if (m.at(i, i) != 0.0) throw ValidationError("distance matrix diagonal is not zero at " + m.ids[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double v = m.at(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError("distance matrix entry (" + m.ids[i] + ", " + m.ids[j] +
                              ") is negative or non-finite");
      }
      if (v != m.at(j, i)) {
        throw ValidationError("distance matrix not symmetric at (" + m.ids[i] + ", " + m.ids[j] + ")");
      }
    }
  }
}

namespace {

DistanceMatrix empty_matrix(std::span<const Path> paths) {
  if (paths.size() < 2) throw PreconditionError("distance matrix needs at least 2 paths");
  for (const auto& p : paths) require_nonempty(p);
  DistanceMatrix m;
  const auto n = paths.size();
  m.ids.reserve(n);
  for (const auto& p : paths) m.ids.push_back(p.voyage_id);
  m.values.assign(n * n, 0.0);
  m.directed.assign(n * n, 0.0);
  return m;
}

void store_pair(DistanceMatrix& m, std::size_t i, std::size_t j, double ij, double ji) {
  const auto n = m.size();
  m.directed[i * n + j] = ij;
  m.directed[j * n + i] = ji;
  const double s = (ij + ji) / 2.0;
  m.values[i * n + j] = s;
  m.values[j * n + i] = s;
}

} // namespace

DistanceMatrix distance_matrix(std::span<const Path> paths, const DistanceOptions& options) {
  auto m = empty_matrix(paths);
  const auto n = static_cast<std::ptrdiff_t>(paths.size());

  std::vector<NearestNeighborIndex> index;
  index.reserve(paths.size());
  for (const auto& p : paths) index.emplace_back(p.points);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(paths.size() * (paths.size() - 1) / 2);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  const auto n_pairs = static_cast<std::ptrdiff_t>(pairs.size());
  int threads = options.threads;
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#else
  threads = 1;
#endif
  // Each pair writes only its own four cells.
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
  for (std::ptrdiff_t k = 0; k < n_pairs; ++k) {
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    const double ij = directed_annd(paths[i], index[j]);
    const double ji = directed_annd(paths[j], index[i]);
    store_pair(m, i, j, ij, ji);
  }
  return m;
}

DistanceMatrix distance_matrix_serial(std::span<const Path> paths) {
  auto m = empty_matrix(paths);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = i + 1; j < paths.size(); ++j) {
      store_pair(m, i, j, directed_annd_exhaustive(paths[i], paths[j]),
                 directed_annd_exhaustive(paths[j], paths[i]));
    }
  }
  return m;
}

namespace {

void write_square(std::ostream& out, const std::vector<std::string>& ids, const std::vector<double>& values) {
  const auto n = ids.size();
  out << "voyage_id";
  for (const auto& id : ids) out << ',' << csv::escape(id);
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << csv::escape(ids[i]);
    for (std::size_t j = 0; j < n; ++j) out << ',' << csv::format_fixed(values[i * n + j], 6);
    out << '\n';
  }
}

} // namespace

void write_matrix(std::ostream& out, const DistanceMatrix& m) { write_square(out, m.ids, m.values); }

void write_directed_matrix(std::ostream& out, const DistanceMatrix& m) {
  if (m.directed.empty()) throw PreconditionError("matrix does not retain directed values");
  write_square(out, m.ids, m.directed);
}

DistanceMatrix read_matrix(std::istream& in) {
  const auto table = csv::read(in);
  if (table.header.empty() || table.header.front() != "voyage_id") {
    throw SchemaError("matrix header must start with 'voyage_id'", 1);
  }
  DistanceMatrix m;
  m.ids.assign(table.header.begin() + 1, table.header.end());
  const auto n = m.ids.size();
  if (table.rows.size() != n) {
    throw SchemaError("matrix has " + std::to_string(table.rows.size()) + " rows for " +
                      std::to_string(n) + " columns");
  }
  m.values.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    if (row.fields.size() != n + 1) {
      throw ParseError("wrong field count on line " + std::to_string(row.line), row.line);
    }
    if (row.fields[0] != m.ids[i]) {
      throw SchemaError("row id '" + row.fields[0] + "' does not match column id '" + m.ids[i] + "'",
                        row.line);
    }
    for (std::size_t j = 0; j < n; ++j) {
      m.values[i * n + j] = csv::parse_double(row.fields[j + 1], row.line, "distance");
    }
  }
  validate(m);
  return m;
}

DistanceMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_matrix(in);
}

} // namespace vpath
