#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "vpath/error.hpp"
#include "vpath/metrics.hpp"

using namespace vpath;

namespace {

const std::vector<std::string> kClasses{"NE", "NM", "NW", "S", "SW"};
const std::vector<long long> kCounts{14, 40, 16, 52, 2};

// Six NM voyages predicted NE, everything else correct.
void confused_labels(std::vector<std::string>& actual, std::vector<std::string>& predicted) {
  for (std::size_t c = 0; c < kClasses.size(); ++c) {
    for (long long i = 0; i < kCounts[c]; ++i) {
      actual.push_back(kClasses[c]);
      predicted.push_back(kClasses[c] == "NM" && i < 6 ? "NE" : kClasses[c]);
    }
  }
}

} // namespace

TEST_CASE("one-vs-all counts and metrics for the NE/NM confusion") {
  std::vector<std::string> actual, predicted;
  confused_labels(actual, predicted);
  const auto cm = confusion(actual, predicted, kClasses);
  CHECK(cm.counts[1][0] == 6);
  CHECK(cm.counts[1][1] == 34);
  CHECK(cm.column_sum(0) == 20);
  CHECK(cm.total() == 124);

  const auto ne = one_vs_all(cm, "NE");
  CHECK(ne.tp == 14);
  CHECK(ne.fp == 6);
  CHECK(ne.fn == 0);
  CHECK(ne.tn == 104);
  const auto nm = one_vs_all(cm, "NM");
  CHECK(nm.tp == 34);
  CHECK(nm.fp == 0);
  CHECK(nm.fn == 6);
  CHECK(nm.tn == 84);

  const auto mne = class_metrics(ne);
  CHECK(std::abs(mne.precision - 0.7) <= 0.0005);
  CHECK(std::abs(mne.recall - 1.0) <= 0.0005);
  CHECK(std::abs(mne.f1 - 0.824) <= 0.0005);
  const auto mnm = class_metrics(nm);
  CHECK(std::abs(mnm.precision - 1.0) <= 0.0005);
  CHECK(std::abs(mnm.recall - 0.85) <= 0.0005);
  CHECK(std::abs(mnm.f1 - 0.919) <= 0.0005);
  for (const char* label : {"NW", "S", "SW"}) {
    const auto m = class_metrics(one_vs_all(cm, label));
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
}

TEST_CASE("perfect predictions give a diagonal matrix") {
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < kClasses.size(); ++c)
    for (long long i = 0; i < kCounts[c]; ++i) labels.push_back(kClasses[c]);
  const auto cm = confusion(labels, labels, kClasses);
  for (std::size_t i = 0; i < kClasses.size(); ++i) {
    CHECK(cm.counts[i][i] == kCounts[i]);
    CHECK(cm.row_sum(i) == kCounts[i]);
    const auto m = class_metrics(one_vs_all(cm, kClasses[i]));
    CHECK(m.f1 == 1.0);
    CHECK_FALSE(m.degenerate);
  }
}

TEST_CASE("degenerate and invalid inputs") {
  const auto empty = confusion({}, {}, kClasses);
  CHECK(empty.total() == 0);
  const auto bc = one_vs_all(empty, "NE");
  CHECK(bc.tp + bc.fp + bc.fn + bc.tn == 0);
  const auto m = class_metrics(bc);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  CHECK(m.degenerate);
  CHECK_THROWS_AS(one_vs_all(empty, "XX"), InputError);
  const std::vector<std::string> a{"NE"}, p{"XX"};
  CHECK_THROWS_AS(confusion(a, p, kClasses), InputError);
}

TEST_CASE("count identities and F1 bounds on random predictions") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> pick(0, kClasses.size() - 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> a, p;
    for (int i = 0; i < 60; ++i) {
      a.push_back(kClasses[pick(rng)]);
      p.push_back(kClasses[pick(rng)]);
    }
    const auto cm = confusion(a, p, kClasses);
    long long trace = 0, tp_sum = 0, rows = 0;
    for (std::size_t i = 0; i < kClasses.size(); ++i) {
      trace += cm.counts[i][i];
      const auto bc = one_vs_all(cm, kClasses[i]);
      tp_sum += bc.tp;
      rows += bc.tp + bc.fn;
      const auto m = class_metrics(bc);
      if (m.precision > 0 && m.recall > 0) {
        CHECK(m.f1 <= 2 * std::min(m.precision, m.recall) + 1e-15);
        CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-15);
      }
    }
    CHECK(trace == tp_sum);
    CHECK(rows == 60);
  }
}

TEST_CASE("alignment recovers identity and swapped labels") {
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const LabelMap truth{{"a", "X"}, {"b", "X"}, {"c", "Y"}, {"d", "Y"}};
  const auto same = align_labels(canonical_assignment(ids, {0, 0, 1, 1}), truth);
  CHECK(same.cluster_to_label.at(0) == "X");
  CHECK(same.matched == 4);
  ClusterAssignment swapped{ids, {1, 1, 0, 0}, 2};
  const auto al = align_labels(swapped, truth);
  CHECK(al.cluster_to_label.at(1) == "X");
  CHECK(al.cluster_to_label.at(0) == "Y");
  CHECK(al.matched == 4);

  const auto extra = align_labels(canonical_assignment(ids, {0, 0, 1, 2}), truth);
  CHECK(extra.predicted.at("d") == kOtherLabel);
  CHECK(extra.matched == 3);

  const LabelMap fewer{{"a", "X"}, {"b", "X"}, {"c", "Y"}};
  CHECK_THROWS_AS(align_labels(canonical_assignment(ids, {0, 0, 1, 1}), fewer), InputError);
}

TEST_CASE("alignment matches the brute-force permutation optimum") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> ids;
    std::vector<int> raw;
    LabelMap truth;
    for (int i = 0; i < 30; ++i) {
      ids.push_back("v" + std::to_string(i));
      raw.push_back(i < 5 ? i : pick(rng));
      truth[ids.back()] = kClasses[static_cast<std::size_t>(i < 5 ? i : pick(rng))];
    }
    const ClusterAssignment a{ids, raw, 5};
    std::vector<int> perm{0, 1, 2, 3, 4};
    std::size_t best = 0;
    do {
      std::size_t hits = 0;
      for (int i = 0; i < 30; ++i)
        if (kClasses[static_cast<std::size_t>(perm[static_cast<std::size_t>(raw[i])])] == truth[ids[i]]) ++hits;
      best = std::max(best, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(align_labels(a, truth).matched == best);
  }
}

TEST_CASE("max-profit assignment on a rectangular table") {
  const std::vector<std::vector<double>> profit{{1, 9, 1}, {8, 7, 1}};
  CHECK(max_profit_assignment(profit) == std::vector<int>{1, 0});
  const std::vector<std::vector<double>> tall{{5}, {9}, {1}};
  CHECK(max_profit_assignment(tall) == std::vector<int>{-1, 0, -1});
}

TEST_CASE("evaluation report and writers") {
  const LabelMap truth{{"a", "NE"}, {"b", "NM"}, {"c", "NM"}};
  const LabelMap pred{{"a", "NE"}, {"b", "NE"}, {"c", "NM"}};
  const auto r = evaluate(truth, pred);
  REQUIRE(r.classes.size() == 2);
  CHECK(r.classes[0].label == "NE");
  CHECK(r.classes[0].precision == 0.5);
  CHECK(r.classes[1].recall == 0.5);
  std::ostringstream table;
  write_metrics_table(table, r);
  CHECK(table.str().find("0.500") != std::string::npos);
  std::ostringstream json;
  write_metrics_json(json, r);
  CHECK(json.str().find("vpath-metrics/1") != std::string::npos);
  CHECK(json.str().find("\"tp\"") != std::string::npos);

  const auto clustered = evaluate(truth, canonical_assignment({"a", "b", "c"}, {0, 1, 1}));
  CHECK(clustered.classes[0].f1 == 1.0);
  CHECK(clustered.classes[1].f1 == 1.0);
  CHECK(clustered.alignment.size() == 2);
}
