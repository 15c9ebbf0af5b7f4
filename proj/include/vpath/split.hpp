#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace vpath {

struct Split {
  std::set<std::string> train;
  std::set<std::string> test;
};

/// Per class, a seeded shuffle of the ids sends round(fraction * n) of them to
/// training (at least 1, and at most n - 1 when n >= 2).
Split stratified_split(const std::map<std::string, std::string>& labels, double train_fraction, std::uint64_t seed);

} // namespace vpath
