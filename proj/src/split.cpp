#include "vpath/split.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vpath/error.hpp"
#include "vpath/rng.hpp"

namespace vpath {

Split stratified_split(const std::map<std::string, std::string>& labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("train fraction must be in (0, 1)");
  std::map<std::string, std::vector<std::string>> by_class;
  for (const auto& [id, label] : labels) by_class[label].push_back(id);
  Split out;
  std::uint64_t stream = 0;
  for (auto& [label, ids] : by_class) {
    Rng rng(derive_seed(seed, stream++));
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto n = ids.size();
    auto k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n >= 2 ? n - 1 : n);
    out.train.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
    out.test.insert(ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end());
  }
  return out;
}

} // namespace vpath
