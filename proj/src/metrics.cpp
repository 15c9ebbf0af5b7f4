#include "vpath/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>

#include <json.hpp>

#include "vpath/csv.hpp"
#include "vpath/error.hpp"

namespace vpath {

std::vector<int> max_profit_assignment(const std::vector<std::vector<double>>& profit) {
  const std::size_t rows = profit.size();
  std::size_t cols = 0;
  for (const auto& r : profit) cols = std::max(cols, r.size());
  if (rows == 0) return {};
  const std::size_t n = std::max(rows, cols);
  double top = 0.0;
  for (const auto& r : profit) {
    for (double v : r) top = std::max(top, v);
  }
  // Square minimization problem; padded cells have profit 0.
  auto cost = [&](std::size_t i, std::size_t j) {
    const double p = (i < rows && j < profit[i].size()) ? profit[i][j] : 0.0;
    return top - p;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> result(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j] - 1;
    if (i < rows && j - 1 < cols) result[i] = static_cast<int>(j - 1);
  }
  return result;
}

namespace {

void require_same_ids(const LabelMap& truth, const std::vector<std::string>& ids) {
  if (ids.size() != truth.size()) {
    throw InputError("id sets differ: " + std::to_string(ids.size()) + " predicted vs " +
                     std::to_string(truth.size()) + " truth");
  }
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!truth.contains(id)) throw InputError("voyage '" + id + "' has no truth label");
    if (!seen.insert(id).second) throw InputError("duplicate predicted voyage '" + id + "'");
  }
}

std::vector<std::string> sorted_labels(const LabelMap& m) {
  std::set<std::string> s;
  for (const auto& [id, label] : m) s.insert(label);
  return {s.begin(), s.end()};
}

} // namespace

Alignment align_labels(const ClusterAssignment& predicted, const LabelMap& truth) {
  require_same_ids(truth, predicted.ids);
  const auto classes = sorted_labels(truth);
  const int k = predicted.k;
  std::vector<std::vector<double>> table(static_cast<std::size_t>(k), std::vector<double>(classes.size(), 0.0));
  for (std::size_t i = 0; i < predicted.ids.size(); ++i) {
    const auto label = predicted.labels[i];
    if (label < 0 || label >= k) throw ValidationError("cluster label out of range");
    const auto c = static_cast<std::size_t>(
        std::lower_bound(classes.begin(), classes.end(), truth.at(predicted.ids[i])) - classes.begin());
    table[static_cast<std::size_t>(label)][c] += 1.0;
  }
  const auto match = max_profit_assignment(table);
  Alignment out;
  for (int c = 0; c < k; ++c) {
    const int j = match[static_cast<std::size_t>(c)];
    out.cluster_to_label[c] = j >= 0 ? classes[static_cast<std::size_t>(j)] : kOtherLabel;
    if (j >= 0) out.matched += static_cast<std::size_t>(table[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)]);
  }
  for (std::size_t i = 0; i < predicted.ids.size(); ++i) {
    out.predicted[predicted.ids[i]] = out.cluster_to_label.at(predicted.labels[i]);
  }
  return out;
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  const auto it = std::find(class_order.begin(), class_order.end(), label);
  if (it == class_order.end()) throw InputError("unknown label '" + label + "'");
  return static_cast<std::size_t>(it - class_order.begin());
}

long long ConfusionMatrix::total() const {
  long long t = 0;
  for (const auto& row : counts) {
    for (auto c : row) t += c;
  }
  return t;
}

long long ConfusionMatrix::row_sum(std::size_t i) const {
  long long t = 0;
  for (auto c : counts[i]) t += c;
  return t;
}

long long ConfusionMatrix::column_sum(std::size_t j) const {
  long long t = 0;
  for (const auto& row : counts) t += row[j];
  return t;
}

ConfusionMatrix confusion(std::span<const std::string> actual, std::span<const std::string> predicted,
                          const std::vector<std::string>& class_order) {
  if (actual.size() != predicted.size()) throw InputError("actual and predicted lengths differ");
  ConfusionMatrix cm;
  cm.class_order = class_order;
  cm.counts.assign(class_order.size(), std::vector<long long>(class_order.size(), 0));
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ++cm.counts[cm.index_of(actual[i])][cm.index_of(predicted[i])];
  }
  return cm;
}

BinaryCounts one_vs_all(const ConfusionMatrix& cm, const std::string& label) {
  const auto i = cm.index_of(label);
  BinaryCounts bc;
  bc.tp = cm.counts[i][i];
  bc.fp = cm.column_sum(i) - bc.tp;
  bc.fn = cm.row_sum(i) - bc.tp;
  bc.tn = cm.total() - bc.tp - bc.fp - bc.fn;
  return bc;
}

ClassMetrics class_metrics(const BinaryCounts& bc, std::string label) {
  ClassMetrics m;
  m.label = std::move(label);
  auto ratio = [&](long long num, long long den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(bc.tp, bc.tp + bc.fp);
  m.recall = ratio(bc.tp, bc.tp + bc.fn);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1 = 0.0;
    m.degenerate = true;
  }
  return m;
}

EvaluationReport evaluate(const LabelMap& truth, const LabelMap& predicted) {
  std::vector<std::string> ids;
  for (const auto& [id, label] : predicted) ids.push_back(id);
  require_same_ids(truth, ids);

  auto order = sorted_labels(truth);
  const auto truth_count = order.size();
  for (const auto& label : sorted_labels(predicted)) {
    if (!std::binary_search(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(truth_count), label)) {
      order.push_back(label);
    }
  }
  std::vector<std::string> actual, pred;
  for (const auto& [id, label] : truth) {
    actual.push_back(label);
    pred.push_back(predicted.at(id));
  }
  EvaluationReport report;
  report.confusion = confusion(actual, pred, order);
  for (std::size_t c = 0; c < truth_count; ++c) {
    report.classes.push_back(class_metrics(one_vs_all(report.confusion, order[c]), order[c]));
  }
  return report;
}

EvaluationReport evaluate(const LabelMap& truth, const ClusterAssignment& predicted) {
  auto alignment = align_labels(predicted, truth);
  auto report = evaluate(truth, alignment.predicted);
  report.alignment = std::move(alignment.cluster_to_label);
  return report;
}

void write_metrics_json(std::ostream& out, const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "vpath-metrics/1";
  j["class_order"] = report.confusion.class_order;
  j["confusion"] = report.confusion.counts;
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (const auto& m : report.classes) {
    const auto bc = one_vs_all(report.confusion, m.label);
    classes.push_back({{"label", m.label},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"degenerate", m.degenerate},
                       {"tp", bc.tp},
                       {"fp", bc.fp},
                       {"fn", bc.fn},
                       {"tn", bc.tn}});
  }
  auto& alignment = j["alignment"] = nlohmann::ordered_json::object();
  for (const auto& [cluster, label] : report.alignment) alignment[std::to_string(cluster)] = label;
  out << j.dump(2) << '\n';
}

void write_metrics_table(std::ostream& out, const EvaluationReport& report) {
  std::size_t width = 5;
  for (const auto& l : report.confusion.class_order) width = std::max(width, l.size());
  width += 2;
  out << std::left << std::setw(static_cast<int>(width)) << "Class" << std::right << std::setw(10) << "Precision"
      << std::setw(10) << "Recall" << std::setw(10) << "F1" << '\n';
  for (const auto& m : report.classes) {
    out << std::left << std::setw(static_cast<int>(width)) << m.label << std::right << std::setw(10)
        << csv::format_fixed(m.precision, 3) << std::setw(10) << csv::format_fixed(m.recall, 3) << std::setw(10)
        << csv::format_fixed(m.f1, 3) << (m.degenerate ? "  (degenerate)" : "") << '\n';
  }
  out << '\n' << std::left << std::setw(static_cast<int>(width)) << "Act\\Pred" << std::right;
  for (const auto& l : report.confusion.class_order) out << std::setw(static_cast<int>(width)) << l;
  out << std::setw(static_cast<int>(width)) << "Total" << '\n';
  for (std::size_t i = 0; i < report.confusion.class_order.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(width)) << report.confusion.class_order[i] << std::right;
    for (auto c : report.confusion.counts[i]) out << std::setw(static_cast<int>(width)) << c;
    out << std::setw(static_cast<int>(width)) << report.confusion.row_sum(i) << '\n';
  }
  out << std::left << std::setw(static_cast<int>(width)) << "Total" << std::right;
  for (std::size_t j = 0; j < report.confusion.class_order.size(); ++j) {
    out << std::setw(static_cast<int>(width)) << report.confusion.column_sum(j);
  }
  out << std::setw(static_cast<int>(width)) << report.confusion.total() << '\n';
}

} // namespace vpath
