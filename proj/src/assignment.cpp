#include "vpath/assignment.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "vpath/csv.hpp"
#include "vpath/error.hpp"

namespace vpath {

ClusterAssignment canonical_assignment(std::vector<std::string> ids, const std::vector<int>& raw) {
  if (ids.size() != raw.size()) throw PreconditionError("ids and labels differ in length");
  ClusterAssignment a;
  a.ids = std::move(ids);
  a.labels.reserve(raw.size());
  std::map<int, int> remap;
  for (int r : raw) {
    auto [it, inserted] = remap.try_emplace(r, static_cast<int>(remap.size()));
    a.labels.push_back(it->second);
  }
  a.k = static_cast<int>(remap.size());
  return a;
}

void write_assignment(std::ostream& out, const ClusterAssignment& a) {
  out << "voyage_id,cluster\n";
  for (std::size_t i = 0; i < a.ids.size(); ++i) out << csv::escape(a.ids[i]) << ',' << a.labels[i] << '\n';
}

ClusterAssignment read_assignment(std::istream& in) {
  const auto table = csv::read(in);
  const auto c_id = table.require("voyage_id");
  const auto c_cluster = table.require("cluster");
  ClusterAssignment a;
  std::set<std::string> seen;
  std::set<int> used;
  for (const auto& row : table.rows) {
    if (row.fields.size() != table.header.size()) {
      throw ParseError("wrong field count on line " + std::to_string(row.line), row.line);
    }
    if (!seen.insert(row.fields[c_id]).second) {
      throw ParseError("duplicate voyage_id '" + row.fields[c_id] + "'", row.line);
    }
    const auto label = csv::parse_int(row.fields[c_cluster], row.line, "cluster");
    if (label < 0) throw ParseError("negative cluster index on line " + std::to_string(row.line), row.line);
    a.ids.push_back(row.fields[c_id]);
    a.labels.push_back(static_cast<int>(label));
    used.insert(static_cast<int>(label));
  }
  a.k = used.empty() ? 0 : *used.rbegin() + 1;
  return a;
}

} // namespace vpath
