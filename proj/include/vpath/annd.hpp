#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vpath/geo.hpp"
#include "vpath/ingest.hpp"

namespace vpath {

/// Projected positions of one voyage. Point order is irrelevant to ANND.
struct Path {
  std::string voyage_id;
  std::vector<LocalPoint> points;
};

Path make_path(const Voyage& v, const Projection& proj);
/// Projects every voyage with one projection anchored at the centroid of all points.
std::vector<Path> make_paths(std::span<const Voyage> voyages);

/// Exhaustive nearest-neighbour distance from `p` to any point of `path`.
double nearest_neighbor_distance(const LocalPoint& p, const Path& path);

/// Static 2-d tree over one path's points. Queries return exactly the same
/// double as the exhaustive scan.
class NearestNeighborIndex {
public:
  explicit NearestNeighborIndex(std::span<const LocalPoint> points);

  std::size_t size() const noexcept { return points_.size(); }

  double nearest_distance(const LocalPoint& q) const;

  /// Squared distance of the nearest point, searching only inside the
  /// squared radius `bound2`. Returns `bound2` unchanged if nothing is closer.
  double nearest_squared_within(const LocalPoint& q, double bound2) const;

private:
  void build(std::size_t lo, std::size_t hi);
  void search(std::size_t lo, std::size_t hi, const LocalPoint& q, double& best2) const;

  std::vector<LocalPoint> points_;
  std::vector<unsigned char> split_dim_; // indexed by the split position of each node
  std::vector<double> split_value_;
};

/// Mean over points of `from` of the distance to the nearest point of `to`.
/// Directional: directed_annd(i, j) != directed_annd(j, i) in general.
double directed_annd(const Path& from, const Path& to);
double directed_annd(const Path& from, const NearestNeighborIndex& to);
/// Same value computed by linear scans only; the reference for the indexed route.
double directed_annd_exhaustive(const Path& from, const Path& to);

/// Average of both directions.
double symmetric_annd(const Path& a, const Path& b);

/// Symmetric m x m matrix of symmetric ANND values (meters).
struct DistanceMatrix {
  std::vector<std::string> ids;
  std::vector<double> values;   // row-major m*m
  std::vector<double> directed; // row-major directed_annd(i -> j); empty when not retained

  std::size_t size() const noexcept { return ids.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * ids.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * ids.size() + j]; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * ids.size(), ids.size()};
  }
};

/// Throws ValidationError when the matrix breaks symmetry, zero diagonal,
/// non-negativity or finiteness.
void validate(const DistanceMatrix& m);

struct DistanceOptions {
  int threads = 0; // 0: OpenMP default
};

/// Parallel over unordered pairs with per-path 2-d trees. Output does not
/// depend on the thread count.
DistanceMatrix distance_matrix(std::span<const Path> paths, const DistanceOptions& options = {});
/// Single-threaded exhaustive reference.
DistanceMatrix distance_matrix_serial(std::span<const Path> paths);

/// Header `voyage_id,<id1>,...`, then one row per id, 6 decimals.
void write_matrix(std::ostream& out, const DistanceMatrix& m);
/// Same layout for the directed values.
void write_directed_matrix(std::ostream& out, const DistanceMatrix& m);
DistanceMatrix read_matrix(std::istream& in);
DistanceMatrix read_matrix_file(const std::string& path);

} // namespace vpath
