#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli_support.hpp"
#include "vpath/annd.hpp"
#include "vpath/gmm.hpp"
#include "vpath/hierarchical.hpp"
#include "vpath/ingest.hpp"
#include "vpath/kmeans.hpp"
#include "vpath/metrics.hpp"
#include "vpath/synth.hpp"

namespace fs = std::filesystem;
using namespace vpath;
using testing::run_cli;
using testing::ScratchDir;
using testing::slurp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int n, const std::string& title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && s >= limit_s) {
    r.pass = false;
    r.detail += (r.detail.empty() ? "" : "; ") + std::string("time limit exceeded");
  }
  if (!r.pass) ++failures;
  std::printf("%s %d %s (%.2f s%s)%s%s\n", r.pass ? "PASS" : "FAIL", n, title.c_str(), s,
              limit_s > 0 ? (" / limit " + std::to_string(static_cast<int>(limit_s)) + " s").c_str() : "",
              r.detail.empty() ? "" : ": ", r.detail.c_str());
  std::fflush(stdout);
}

bool all_perfect(const fs::path& metrics_json, std::string& detail) {
  const auto j = nlohmann::json::parse(slurp(metrics_json));
  bool ok = true;
  std::size_t n = 0;
  for (const auto& c : j.at("classes")) {
    ++n;
    if (c.at("precision") != 1.0 || c.at("recall") != 1.0 || c.at("f1") != 1.0) {
      ok = false;
      detail += c.at("label").get<std::string>() + " not perfect; ";
    }
  }
  if (n != 5) {
    ok = false;
    detail += std::to_string(n) + " classes reported; ";
  }
  return ok;
}

std::string cli(const std::string& args, const fs::path& scratch, const std::string& env = {}) {
  const auto r = run_cli(args, scratch, env);
  if (r.status != 0) throw std::runtime_error("vpath " + args + " exited " + std::to_string(r.status) + ": " + r.err);
  return r.out;
}

// Class pairs that share at least one cluster.
std::set<std::pair<std::string, std::string>> co_clustered(const ClusterAssignment& a, const LabelMap& truth) {
  std::map<int, std::set<std::string>> classes_in;
  for (std::size_t i = 0; i < a.ids.size(); ++i) classes_in[a.labels[i]].insert(truth.at(a.ids[i]));
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [c, labels] : classes_in)
    for (const auto& x : labels)
      for (const auto& y : labels)
        if (x < y) out.insert({x, y});
  return out;
}

std::vector<std::map<std::string, std::string>> read_rows(const fs::path& csv) {
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::istringstream h(line);
  for (std::string c; std::getline(h, c, ',');) header.push_back(c);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::map<std::string, std::string> row;
    std::size_t k = 0;
    for (std::string c; std::getline(cells, c, ',') && k < header.size(); ++k) row[header[k]] = c;
    rows.push_back(row);
  }
  return rows;
}

} // namespace

int main() {
  ScratchDir work("acceptance");
  const auto& root = work.path();

  criterion(1, "confusion counts reproduce the reference k-means/GMM metrics", 1.0, [] {
    const std::vector<std::string> order{"NE", "NM", "NW", "S", "SW"};
    const std::vector<int> counts{14, 40, 16, 52, 2};
    std::vector<std::string> actual, predicted;
    for (std::size_t c = 0; c < order.size(); ++c)
      for (int i = 0; i < counts[c]; ++i) {
        actual.push_back(order[c]);
        predicted.push_back(order[c] == "NM" && i < 6 ? "NE" : order[c]);
      }
    const auto cm = confusion(actual, predicted, order);
    const std::map<std::string, std::array<double, 3>> expected{{"NE", {0.7, 1, 0.824}},
                                                                {"NM", {1, 0.85, 0.919}},
                                                                {"NW", {1, 1, 1}},
                                                                {"S", {1, 1, 1}},
                                                                {"SW", {1, 1, 1}}};
    Outcome r{true, ""};
    for (const auto& [label, e] : expected) {
      const auto m = class_metrics(one_vs_all(cm, label));
      const double got[3] = {m.precision, m.recall, m.f1};
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s %.3f/%.3f/%.3f ", label.c_str(), got[0], got[1], got[2]);
      r.detail += buf;
      for (int k = 0; k < 3; ++k)
        if (std::abs(std::round(got[k] * 1000.0) / 1000.0 - e[k]) > 0.0005) r.pass = false;
    }
    return r;
  });

  const fs::path pipe = root / "pipeline";
  criterion(2, "pipeline with average linkage at cutoff 100 is perfect for all classes", 10.0, [&] {
    cli("pipeline --out " + pipe.string(), root);
    Outcome r;
    r.pass = all_perfect(pipe / "metrics.json", r.detail);
    if (r.pass) r.detail = "P = R = F1 = 1 for NE NM NW S SW";
    return r;
  });

  const fs::path seg = root / "segmented";
  criterion(3, "segment fit (S=8, C=3) on a 70/30 split classifies the held-out set perfectly", 20.0, [&] {
    const auto g = seg / "gen";
    cli("gen --novel 10 --out " + g.string(), root);
    cli("split --labels " + (g / "labels.csv").string() + " --fraction 0.7 --seed 1 --out " + (seg / "split").string(),
        root);
    cli("segment --voyages " + (g / "voyages.csv").string() + " --labels " + (seg / "split/train_labels.csv").string() +
            " --segments 8 --components 3 --out " + (seg / "model.json").string(),
        root);
    cli("classify --model " + (seg / "model.json").string() + " --voyages " + (g / "voyages.csv").string() +
            " --subset " + (seg / "split/test_labels.csv").string() + " --out " + (seg / "pred.csv").string(),
        root);
    cli("eval --predicted " + (seg / "pred.csv").string() + " --truth " + (seg / "split/test_labels.csv").string() +
            " --json " + (seg / "metrics.json").string(),
        root);
    Outcome r;
    r.pass = all_perfect(seg / "metrics.json", r.detail);
    if (r.pass) r.detail = "F1 = 1 for NE NM NW S SW on " + std::to_string(read_rows(seg / "pred.csv").size()) + " held-out voyages";
    return r;
  });

  criterion(4, "k-means confuses only the hard NE/NM pair; hierarchical confuses none", 0.0, [&] {
    const auto m = read_matrix_file((pipe / "matrix.csv").string());
    const auto truth = read_labels_file((pipe / "labels.csv").string());
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> pair_mean;
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = 0; j < m.size(); ++j) {
        const auto& a = truth.at(m.ids[i]);
        const auto& b = truth.at(m.ids[j]);
        if (a < b) {
          auto& [sum, n] = pair_mean[{a, b}];
          sum += m.at(i, j);
          ++n;
        }
      }
    Outcome r{true, ""};
    int ne_nm = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      for (const auto& p : co_clustered(kmeans(m, 5, seed), truth)) {
        const double mean = pair_mean[p].first / pair_mean[p].second;
        if (p == std::pair<std::string, std::string>{"NE", "NM"}) ++ne_nm;
        if (mean > 120.0) {
          r.pass = false;
          r.detail += "seed " + std::to_string(seed) + " confused " + p.first + "/" + p.second + "; ";
        }
      }
    }
    if (ne_nm == 0) {
      r.pass = false;
      r.detail += "NE/NM never confused; ";
    }
    const auto hier = co_clustered(hierarchical_cluster(m, Linkage::Average, 100.0).assignment, truth);
    if (!hier.empty()) {
      r.pass = false;
      r.detail += "hierarchical confused " + hier.begin()->first + "/" + hier.begin()->second + "; ";
    }
    char buf[128];
    const auto& nm = pair_mean[{"NE", "NM"}];
    std::snprintf(buf, sizeof buf, "NE/NM confused in %d/10 seeds (mean ANND %.1f m)", ne_nm, nm.first / nm.second);
    r.detail += buf;
    return r;
  });

  criterion(5, "accelerated ANND equals the exhaustive scan on 200 random voyage pairs", 5.0, [] {
    std::vector<Voyage> voyages;
    for (auto& l : generate(default_config())) voyages.push_back(std::move(l.voyage));
    const auto paths = make_paths(voyages);
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> pick(0, paths.size() - 1);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const auto i = pick(rng);
      auto j = pick(rng);
      while (j == i) j = pick(rng);
      const double fast[2] = {directed_annd(paths[i], paths[j]), directed_annd(paths[j], paths[i])};
      const double slow[2] = {directed_annd_exhaustive(paths[i], paths[j]), directed_annd_exhaustive(paths[j], paths[i])};
      for (int d = 0; d < 2; ++d) worst = std::max(worst, std::abs(fast[d] - slow[d]) / std::max(slow[d], 1e-300));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative difference %.3g", worst);
    return Outcome{worst <= 1e-9, buf};
  });

  criterion(6, "property suite", 0.0, [] {
    Outcome r{true, ""};
    std::mt19937_64 rng(6);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> u(-100.0, 100.0);

    double worst_drop = 0.0, worst_resp = 0.0;
    for (int fit = 0; fit < 50; ++fit) {
      FeatureMatrix x(120, 2);
      for (int i = 0; i < 120; ++i) {
        const double cx = (i % 3) * 15.0, cy = (i % 2) * 10.0;
        x.row(i) << cx + 4 * noise(rng), cy + 4 * noise(rng);
      }
      const auto run = gmm_fit_single(x, 1 + fit % 4, static_cast<std::uint64_t>(fit));
      for (std::size_t i = 1; i < run.loglik_trace.size(); ++i)
        worst_drop = std::max(worst_drop, run.loglik_trace[i - 1] - run.loglik_trace[i]);
      Eigen::MatrixXd resp;
      MixtureEvaluator(run.model).log_likelihood(x, &resp);
      for (Eigen::Index i = 0; i < resp.rows(); ++i) worst_resp = std::max(worst_resp, std::abs(resp.row(i).sum() - 1.0));
    }
    if (worst_drop > 1e-9) r.pass = false, r.detail += "EM decreased; ";
    if (worst_resp > 1e-12) r.pass = false, r.detail += "responsibilities off; ";

    bool wcss_ok = true, heights_ok = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      FeatureMatrix x = FeatureMatrix::NullaryExpr(80, 3, [&] { return u(rng); });
      const auto run = kmeans_single(x, 2 + seed % 5, seed, 300);
      for (std::size_t i = 1; i < run.wcss_trace.size(); ++i)
        if (run.wcss_trace[i] > run.wcss_trace[i - 1] * (1 + 1e-12)) wcss_ok = false;
      DistanceMatrix m;
      const std::size_t n = 25;
      for (std::size_t i = 0; i < n; ++i) m.ids.push_back("p" + std::to_string(100 + i));
      m.values.assign(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m.at(i, j) = m.at(j, i) = std::abs(u(rng)) + 1.0;
      const auto d = build_dendrogram(m, Linkage::Average);
      for (std::size_t i = 1; i < d.merges.size(); ++i)
        if (d.merges[i].height < d.merges[i - 1].height) heights_ok = false;
    }
    if (!wcss_ok) r.pass = false, r.detail += "WCSS increased; ";
    if (!heights_ok) r.pass = false, r.detail += "linkage heights decreased; ";

    int annd_bad = 0;
    std::uniform_int_distribution<std::size_t> size(1, 80);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (int c = 0; c < 500; ++c) {
      Path a{"a", {}}, b{"b", {}};
      for (std::size_t k = size(rng); k > 0; --k) a.points.push_back({u(rng) * 10, u(rng) * 10});
      for (std::size_t k = size(rng); k > 0; --k) b.points.push_back({u(rng) * 10, u(rng) * 10});
      const double ab = symmetric_annd(a, b);
      const double dx = u(rng) * 50, dy = u(rng) * 50, s = scale(rng);
      Path ta = a, tb = b, sa = a, sb = b;
      for (auto* p : {&ta, &tb})
        for (auto& q : p->points) q = {q.x + dx, q.y + dy};
      for (auto* p : {&sa, &sb})
        for (auto& q : p->points) q = {q.x * s, q.y * s};
      const bool ok = symmetric_annd(a, a) == 0.0 && ab == symmetric_annd(b, a) &&
                      std::abs(symmetric_annd(ta, tb) - ab) <= 1e-9 * std::max(1.0, ab) &&
                      std::abs(symmetric_annd(sa, sb) - s * ab) <= 1e-12 * s * ab + 1e-12;
      annd_bad += !ok;
    }
    if (annd_bad) r.pass = false, r.detail += std::to_string(annd_bad) + " ANND cases failed; ";
    if (r.pass) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "50 EM fits (max drop %.2g), responsibilities within %.2g, WCSS and heights monotone, 500 ANND cases",
                    worst_drop, worst_resp);
      r.detail = buf;
    }
    return r;
  });

  criterion(7, "every CLI command is byte-identical across reruns and worker counts", 0.0, [&] {
    const std::vector<std::string> commands{
        "gen --novel 10 --out gen",
        "stats --voyages gen/voyages.csv --labels gen/labels.csv --out stats.csv",
        "dist --voyages gen/voyages.csv --out matrix.csv --directed directed.csv",
        "dist --serial --voyages gen/voyages.csv --out matrix_serial.csv",
        "cluster --matrix matrix.csv --out hier.csv --dendrogram dendrogram.json",
        "cluster --method kmeans --k 5 --seed 3 --matrix matrix.csv --out kmeans.csv",
        "cluster --method gmm --k 5 --seed 3 --matrix matrix.csv --out gmm.csv",
        "split --labels gen/labels.csv --out split",
        "segment --voyages gen/voyages.csv --labels split/train_labels.csv --out model.json",
        "classify --model model.json --voyages gen/voyages.csv --subset split/test_labels.csv --out pred.csv",
        "classify --model model.json --voyages gen/novel.csv --out novel_pred.csv",
        "eval --predicted pred.csv --truth split/test_labels.csv --json seg_metrics.json",
        "eval --predicted kmeans.csv --truth gen/labels.csv --json kmeans_metrics.json",
        "pipeline --out pipe",
    };
    const std::vector<std::pair<std::string, int>> runs{{"t1", 1}, {"t4", 4}, {"t4again", 4}};
    for (const auto& [name, threads] : runs) {
      const auto dir = root / "determinism" / name;
      fs::create_directories(dir);
      std::string transcript;
      for (const auto& c : commands) {
        transcript += "$ " + c + "\n" +
                      cli(c, dir,
                          "cd '" + dir.string() + "' && SOURCE_DATE_EPOCH=1700000000 VPATH_THREADS=" +
                              std::to_string(threads));
      }
      std::ofstream(dir / "transcript.txt") << transcript;
      fs::remove(dir / ".stdout");
      fs::remove(dir / ".stderr");
    }
    auto listing = [](const fs::path& dir) {
      std::map<std::string, std::string> files;
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
      return files;
    };
    const auto ref = listing(root / "determinism/t1");
    Outcome r{true, ""};
    for (const auto& name : {"t4", "t4again"}) {
      const auto other = listing(root / "determinism" / name);
      if (other.size() != ref.size()) r.pass = false, r.detail += std::string(name) + " file count differs; ";
      for (const auto& [path, content] : ref) {
        const auto it = other.find(path);
        if (it == other.end() || it->second != content) r.pass = false, r.detail += std::string(name) + ":" + path + " differs; ";
      }
    }
    if (slurp(root / "determinism/t1/matrix.csv") != slurp(root / "determinism/t1/matrix_serial.csv"))
      r.pass = false, r.detail += "parallel and serial matrices differ; ";
    if (r.pass)
      r.detail = std::to_string(commands.size()) + " commands, " + std::to_string(ref.size()) +
                 " files identical for 1 and 4 workers and on rerun";
    return r;
  });

  criterion(8, "novel voyages are all flagged with no false flags on held-out voyages", 0.0, [&] {
    cli("classify --model " + (seg / "model.json").string() + " --voyages " + (seg / "gen/novel.csv").string() +
            " --out " + (seg / "novel_pred.csv").string(),
        root);
    const auto novel = read_rows(seg / "novel_pred.csv");
    const auto held = read_rows(seg / "pred.csv");
    std::size_t flagged = 0, false_flags = 0;
    for (const auto& row : novel) flagged += row.at("novel") == "1";
    for (const auto& row : held) false_flags += row.at("novel") == "1";
    Outcome r;
    r.pass = !novel.empty() && flagged == novel.size() && false_flags == 0;
    r.detail = std::to_string(flagged) + "/" + std::to_string(novel.size()) + " novel flagged, " +
               std::to_string(false_flags) + "/" + std::to_string(held.size()) + " held-out falsely flagged";
    return r;
  });

  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
