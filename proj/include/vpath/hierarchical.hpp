#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vpath/annd.hpp"
#include "vpath/assignment.hpp"

namespace vpath {

enum class Linkage { Single, Complete, Average };

std::string_view to_string(Linkage linkage) noexcept;
Linkage parse_linkage(std::string_view name);

/// One agglomeration step. Leaves are nodes 0..m-1; merge i creates node m+i.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0; // linkage distance between the merged clusters, meters
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<std::string> ids; // leaf ids, aligned with the source matrix
  Linkage linkage = Linkage::Average;
  std::vector<Merge> merges;    // exactly ids.size() - 1, in merge order
};

/// Agglomerative clustering on a precomputed matrix. Equal heights are broken
/// by the lexicographically smallest (id, id) pair, where a cluster is keyed by
/// its smallest leaf id.
Dendrogram build_dendrogram(const DistanceMatrix& matrix, Linkage linkage);

/// Connected components after dropping every merge higher than `cutoff`.
ClusterAssignment cut_at_height(const Dendrogram& d, double cutoff);

/// Undo the last k-1 merges, leaving exactly k clusters.
ClusterAssignment cut_dendrogram(const Dendrogram& d, std::size_t k);

struct HierarchicalResult {
  Dendrogram dendrogram;
  ClusterAssignment assignment;
};

HierarchicalResult hierarchical_cluster(const DistanceMatrix& matrix, Linkage linkage, double cutoff);

void write_dendrogram_json(std::ostream& out, const Dendrogram& d);
Dendrogram read_dendrogram_json(std::istream& in);

} // namespace vpath
