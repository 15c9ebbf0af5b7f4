#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace vpath {

/// Flat clustering: labels[i] in [0, k) for ids[i], every label used.
struct ClusterAssignment {
  std::vector<std::string> ids;
  std::vector<int> labels;
  int k = 0;
};

/// Renumbers labels by order of first appearance and recomputes k, so
/// equivalent partitions compare equal.
ClusterAssignment canonical_assignment(std::vector<std::string> ids, const std::vector<int>& raw);

/// `voyage_id,cluster`
void write_assignment(std::ostream& out, const ClusterAssignment& a);
ClusterAssignment read_assignment(std::istream& in);

} // namespace vpath
