#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vpath/assignment.hpp"

namespace vpath {

/// Prediction for clusters that no class was matched to.
inline const std::string kOtherLabel = "OTHER";

using LabelMap = std::map<std::string, std::string>; // voyage_id -> label

/// Maximum-profit one-to-one matching of rows to columns (Hungarian method).
/// result[r] is the column matched to row r, or -1 when rows outnumber columns.
std::vector<int> max_profit_assignment(const std::vector<std::vector<double>>& profit);

struct Alignment {
  std::map<int, std::string> cluster_to_label;
  LabelMap predicted; // voyage_id -> aligned label
  std::size_t matched = 0; // voyages on the diagonal after alignment
};

/// Optimal cluster -> class mapping maximizing agreement. Id sets must match.
Alignment align_labels(const ClusterAssignment& predicted, const LabelMap& truth);

/// Rows actual, columns predicted.
struct ConfusionMatrix {
  std::vector<std::string> class_order;
  std::vector<std::vector<long long>> counts;

  std::size_t index_of(const std::string& label) const; // InputError when unknown
  long long total() const;
  long long row_sum(std::size_t i) const;
  long long column_sum(std::size_t j) const;
};

ConfusionMatrix confusion(std::span<const std::string> actual, std::span<const std::string> predicted,
                          const std::vector<std::string>& class_order);

struct BinaryCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

BinaryCounts one_vs_all(const ConfusionMatrix& cm, const std::string& label);

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false; // some ratio was 0/0 and reported as 0
};

ClassMetrics class_metrics(const BinaryCounts& bc, std::string label = {});

struct EvaluationReport {
  ConfusionMatrix confusion;
  std::vector<ClassMetrics> classes; // one per actual class, in class order
  std::map<int, std::string> alignment; // empty when predictions were labels already
};

/// Compares label predictions with truth over identical id sets. Class order:
/// sorted truth labels, then any other predicted labels (sorted).
EvaluationReport evaluate(const LabelMap& truth, const LabelMap& predicted);
/// Aligns cluster indices first.
EvaluationReport evaluate(const LabelMap& truth, const ClusterAssignment& predicted);

void write_metrics_json(std::ostream& out, const EvaluationReport& report);
/// Class rows with Precision/Recall/F1 to 3 decimals, then the confusion matrix.
void write_metrics_table(std::ostream& out, const EvaluationReport& report);

} // namespace vpath
