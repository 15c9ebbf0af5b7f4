#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vpath/annd.hpp"
#include "vpath/csv.hpp"
#include "vpath/error.hpp"
#include "vpath/gmm.hpp"
#include "vpath/hierarchical.hpp"
#include "vpath/ingest.hpp"
#include "vpath/kmeans.hpp"
#include "vpath/manifest.hpp"
#include "vpath/metrics.hpp"
#include "vpath/segment.hpp"
#include "vpath/split.hpp"
#include "vpath/synth.hpp"

namespace fs = std::filesystem;
using namespace vpath;

namespace {

int g_threads = 0;

int threads_from_env() {
  const char* env = std::getenv("VPATH_THREADS");
  if (!env || !*env) return 0;
  try {
    const int n = std::stoi(env);
    if (n < 0) throw std::invalid_argument("negative");
    return n;
  } catch (const std::exception&) {
    throw ParameterError("VPATH_THREADS must be a nonnegative integer");
  }
}

void apply_threads() {
#ifdef _OPENMP
  if (g_threads > 0) omp_set_num_threads(g_threads);
#endif
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

class Run {
public:
  explicit Run(std::string command) {
    m_.command = std::move(command);
    m_.started = manifest_clock();
  }

  template <class T>
  void param(const std::string& key, const T& value) {
    std::ostringstream s;
    s << value;
    m_.parameters.emplace_back(key, s.str());
  }
  void seed(std::uint64_t s) { m_.seed = s; }
  void input(const std::string& path) { m_.inputs.push_back({path, sha256_file(path)}); }

  void output(const fs::path& path, const std::string& content) {
    write_file(path, content);
    outputs_.emplace_back(path, sha256_hex(content));
  }

  void finish(const fs::path& manifest_path) {
    const auto base = fs::absolute(manifest_path).parent_path();
    for (const auto& [path, digest] : outputs_) {
      m_.outputs.push_back({fs::absolute(path).lexically_normal().lexically_relative(base).generic_string(), digest});
    }
    m_.finished = manifest_clock();
    write_file(manifest_path, render([&](std::ostream& o) { write_manifest(o, m_); }));
  }

private:
  RunManifest m_;
  std::vector<std::pair<fs::path, std::string>> outputs_;
};

fs::path sibling_manifest(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

std::string labels_csv(const LabelMap& labels) {
  std::string out = "voyage_id,class_label\n";
  for (const auto& [id, label] : labels) out += csv::escape(id) + "," + csv::escape(label) + "\n";
  return out;
}

std::vector<Voyage> load_voyages(const std::string& path) {
  auto parsed = parse_voyages_file(path);
  if (parsed.dropped_voyages > 0) {
    std::cerr << "vpath: warning: dropped " << parsed.dropped_voyages << " voyage(s) with fewer than 2 points\n";
  }
  if (parsed.duplicate_rows > 0) {
    std::cerr << "vpath: note: collapsed " << parsed.duplicate_rows << " row(s) sharing a second\n";
  }
  return std::move(parsed.voyages);
}

std::vector<Voyage> restrict_to(const std::vector<Voyage>& voyages, const LabelMap& labels) {
  std::vector<Voyage> out;
  for (const auto& v : voyages) {
    if (labels.contains(v.id)) out.push_back(v);
  }
  if (out.size() != labels.size()) throw InputError("labels name voyages that are not in the voyage file");
  return out;
}

std::vector<Voyage> voyages_of(const std::vector<LabeledVoyage>& lv) {
  std::vector<Voyage> out;
  for (const auto& l : lv) out.push_back(l.voyage);
  return out;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t novel = 0;
};

GeneratorConfig load_generator_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  auto config = path.empty() ? default_config() : read_config_file(path);
  if (seed) config.seed = *seed;
  return config;
}

void cmd_gen(const GenArgs& a) {
  Run run("gen");
  if (!a.config.empty()) run.input(a.config);
  const auto config = load_generator_config(a.config, a.seed);
  run.seed(config.seed);
  run.param("config", a.config.empty() ? "default" : a.config);
  run.param("novel", a.novel);
  const fs::path dir(a.out);
  ensure_dir(dir);
  const auto labeled = generate(config);
  const auto voyages = voyages_of(labeled);
  run.output(dir / "voyages.csv", render([&](std::ostream& o) { write_voyages(o, voyages); }));
  run.output(dir / "labels.csv", render([&](std::ostream& o) { write_labels(o, labeled); }));
  run.output(dir / "config.json", render([&](std::ostream& o) { write_config(o, config); }));
  if (a.novel > 0) {
    const auto novel = generate_novel(config, a.novel);
    run.output(dir / "novel.csv", render([&](std::ostream& o) { write_voyages(o, novel); }));
  }
  run.finish(dir / "manifest.json");
  std::cerr << "vpath: generated " << labeled.size() << " voyages in " << dir.string() << "\n";
}

// ---- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string voyages, labels, out;
};

void cmd_stats(const StatsArgs& a) {
  Run run("stats");
  run.input(a.voyages);
  run.input(a.labels);
  const auto voyages = load_voyages(a.voyages);
  const auto labeled = attach_labels(voyages, read_labels_file(a.labels));
  const auto text = render([&](std::ostream& o) { write_statistics(o, class_statistics(labeled)); });
  if (a.out.empty()) {
    std::cout << text;
    return;
  }
  run.output(a.out, text);
  run.finish(sibling_manifest(a.out));
}

// ---- dist ------------------------------------------------------------------

struct DistArgs {
  std::string voyages, out, directed;
  bool serial = false;
};

DistanceMatrix compute_matrix(const std::vector<Voyage>& voyages, bool serial) {
  const auto paths = make_paths(voyages);
  return serial ? distance_matrix_serial(paths) : distance_matrix(paths, {.threads = g_threads});
}

void cmd_dist(const DistArgs& a) {
  Run run("dist");
  run.input(a.voyages);
  run.param("serial", a.serial);
  const auto m = compute_matrix(load_voyages(a.voyages), a.serial);
  run.output(a.out, render([&](std::ostream& o) { write_matrix(o, m); }));
  if (!a.directed.empty()) run.output(a.directed, render([&](std::ostream& o) { write_directed_matrix(o, m); }));
  run.finish(sibling_manifest(a.out));
}

// ---- cluster ---------------------------------------------------------------

struct ClusterArgs {
  std::string matrix, method = "hier", linkage = "average", out, dendrogram;
  double cutoff = 100.0;
  std::optional<std::size_t> k;
  std::uint64_t seed = 1;
  int restarts = 0;
  double reg = kRowRegularization;
};

struct ClusterOutcome {
  ClusterAssignment assignment;
  std::optional<Dendrogram> dendrogram;
};

ClusterOutcome run_clusterer(const DistanceMatrix& m, const ClusterArgs& a, Run& run) {
  run.param("method", a.method);
  ClusterOutcome out;
  if (a.method == "hier") {
    const auto linkage = parse_linkage(a.linkage);
    run.param("linkage", a.linkage);
    auto d = build_dendrogram(m, linkage);
    if (a.k) {
      run.param("k", *a.k);
      out.assignment = cut_dendrogram(d, *a.k);
    } else {
      run.param("cutoff", a.cutoff);
      out.assignment = cut_at_height(d, a.cutoff);
    }
    out.dendrogram = std::move(d);
    return out;
  }
  if (!a.k) throw ParameterError("--k is required for method '" + a.method + "'");
  run.param("k", *a.k);
  run.param("cluster_seed", a.seed);
  if (a.method == "kmeans") {
    KMeansOptions o;
    if (a.restarts > 0) o.restarts = a.restarts;
    o.threads = g_threads;
    run.param("restarts", o.restarts);
    out.assignment = kmeans(m, *a.k, a.seed, o);
  } else if (a.method == "gmm") {
    GmmOptions o;
    if (a.restarts > 0) o.restarts = a.restarts;
    o.regularization = a.reg;
    o.threads = g_threads;
    run.param("restarts", o.restarts);
    run.param("reg", a.reg);
    out.assignment = gmm_cluster(m, *a.k, a.seed, o);
  } else {
    throw ParameterError("unknown method '" + a.method + "' (expected hier, kmeans or gmm)");
  }
  return out;
}

void cmd_cluster(const ClusterArgs& a) {
  Run run("cluster");
  run.input(a.matrix);
  const auto m = read_matrix_file(a.matrix);
  if (a.method != "hier") run.seed(a.seed);
  const auto result = run_clusterer(m, a, run);
  run.output(a.out, render([&](std::ostream& o) { write_assignment(o, result.assignment); }));
  if (!a.dendrogram.empty()) {
    if (!result.dendrogram) throw ParameterError("--dendrogram is only available for method 'hier'");
    run.output(a.dendrogram, render([&](std::ostream& o) { write_dendrogram_json(o, *result.dendrogram); }));
  }
  run.finish(sibling_manifest(a.out));
  std::cerr << "vpath: " << result.assignment.k << " clusters\n";
}

// ---- split -----------------------------------------------------------------

struct SplitArgs {
  std::string labels, out;
  double fraction = 0.7;
  std::uint64_t seed = 1;
};

void cmd_split(const SplitArgs& a) {
  Run run("split");
  run.input(a.labels);
  run.seed(a.seed);
  run.param("fraction", a.fraction);
  const auto labels = read_labels_file(a.labels);
  const auto split = stratified_split(labels, a.fraction, a.seed);
  LabelMap train, test;
  for (const auto& id : split.train) train[id] = labels.at(id);
  for (const auto& id : split.test) test[id] = labels.at(id);
  const fs::path dir(a.out);
  run.output(dir / "train_labels.csv", labels_csv(train));
  run.output(dir / "test_labels.csv", labels_csv(test));
  run.finish(dir / "manifest.json");
}

// ---- segment / classify ----------------------------------------------------

struct SegmentArgs {
  std::string voyages, labels, out;
  std::size_t segments = 8, components = 3;
  std::uint64_t seed = 1;
  int restarts = 5;
};

void cmd_segment(const SegmentArgs& a) {
  Run run("segment");
  run.input(a.voyages);
  run.input(a.labels);
  run.seed(a.seed);
  run.param("segments", a.segments);
  run.param("components", a.components);
  run.param("restarts", a.restarts);
  const auto labels = read_labels_file(a.labels);
  const auto train = restrict_to(load_voyages(a.voyages), labels);
  std::vector<GeoPoint> all;
  for (const auto& v : train) {
    for (const auto& p : v.points) all.push_back(p.position);
  }
  const auto proj = projection_for(all);
  const auto scheme = build_scheme(train, a.segments, proj);
  SegmentFitOptions options;
  options.gmm.restarts = a.restarts;
  options.threads = g_threads;
  SegmentModelFile model{fit_segment_models(train, scheme, proj, a.components, a.seed, options), {}};
  std::vector<PathSignature> sigs;
  std::vector<std::string> names;
  for (const auto& v : train) {
    sigs.push_back(signature(v, model.models));
    names.push_back(labels.at(v.id));
  }
  model.map = learn_signature_map(sigs, names);
  run.output(a.out, render([&](std::ostream& o) { write_model_json(o, model); }));
  run.finish(sibling_manifest(a.out));
  std::cerr << "vpath: " << model.map.entries.size() << " signature keys over " << model.map.discriminative.size()
            << " discriminative segments\n";
}

struct ClassifyArgs {
  std::string model, voyages, subset, out;
};

void cmd_classify(const ClassifyArgs& a) {
  Run run("classify");
  run.input(a.model);
  run.input(a.voyages);
  std::ifstream in(a.model);
  if (!in) throw IoError("cannot read '" + a.model + "'");
  const auto model = read_model_json(in);
  auto voyages = load_voyages(a.voyages);
  if (!a.subset.empty()) {
    run.input(a.subset);
    voyages = restrict_to(voyages, read_labels_file(a.subset));
  }
  std::vector<Classification> results(voyages.size());
  std::size_t novel = 0, unclassifiable = 0;
  for (std::size_t i = 0; i < voyages.size(); ++i) {
    try {
      results[i] = classify_voyage(voyages[i], model.models, model.map);
    } catch (const UnclassifiableError& e) {
      std::cerr << "vpath: warning: " << e.what() << "\n";
      results[i].voyage_id = voyages[i].id;
      results[i].label = "UNCLASSIFIABLE";
      results[i].novel = true;
      results[i].signature = signature(voyages[i], model.models);
      ++unclassifiable;
    }
    novel += results[i].novel ? 1 : 0;
  }
  run.output(a.out, render([&](std::ostream& o) {
               write_classifications(o, results, model.models.scheme.segments());
             }));
  run.finish(sibling_manifest(a.out));
  std::cerr << "vpath: classified " << voyages.size() << " voyages, " << novel << " flagged novel";
  if (unclassifiable) std::cerr << ", " << unclassifiable << " unclassifiable";
  std::cerr << "\n";
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string predicted, truth, json;
};

EvaluationReport evaluate_file(const std::string& predicted, const LabelMap& truth) {
  const auto table = csv::read_file(predicted);
  if (table.column("cluster")) {
    std::ifstream in(predicted);
    return evaluate(truth, read_assignment(in));
  }
  std::ifstream in(predicted);
  return evaluate(truth, read_labels(in));
}

void cmd_eval(const EvalArgs& a) {
  Run run("eval");
  run.input(a.predicted);
  run.input(a.truth);
  const auto report = evaluate_file(a.predicted, read_labels_file(a.truth));
  write_metrics_table(std::cout, report);
  if (!a.json.empty()) {
    run.output(a.json, render([&](std::ostream& o) { write_metrics_json(o, report); }));
    run.finish(sibling_manifest(a.json));
  }
}

// ---- pipeline --------------------------------------------------------------

struct PipelineArgs {
  GenArgs gen;
  ClusterArgs cluster;
};

void cmd_pipeline(const PipelineArgs& a) {
  Run run("pipeline");
  if (!a.gen.config.empty()) run.input(a.gen.config);
  const auto config = load_generator_config(a.gen.config, a.gen.seed);
  run.param("config", a.gen.config.empty() ? "default" : a.gen.config);
  run.seed(config.seed);
  const fs::path dir(a.gen.out);
  ensure_dir(dir);

  const auto labeled = generate(config);
  const auto voyages = voyages_of(labeled);
  run.output(dir / "voyages.csv", render([&](std::ostream& o) { write_voyages(o, voyages); }));
  run.output(dir / "labels.csv", render([&](std::ostream& o) { write_labels(o, labeled); }));

  const auto m = compute_matrix(voyages, false);
  run.output(dir / "matrix.csv", render([&](std::ostream& o) { write_matrix(o, m); }));

  const auto result = run_clusterer(m, a.cluster, run);
  run.output(dir / "assignment.csv", render([&](std::ostream& o) { write_assignment(o, result.assignment); }));
  if (result.dendrogram) {
    run.output(dir / "dendrogram.json", render([&](std::ostream& o) { write_dendrogram_json(o, *result.dendrogram); }));
  }

  LabelMap truth;
  for (const auto& l : labeled) truth[l.voyage.id] = l.class_label;
  const auto report = evaluate(truth, result.assignment);
  run.output(dir / "metrics.json", render([&](std::ostream& o) { write_metrics_json(o, report); }));
  run.finish(dir / "manifest.json");
  write_metrics_table(std::cout, report);
}

void add_cluster_options(CLI::App* sub, ClusterArgs& a) {
  sub->add_option("--method", a.method, "hier, kmeans or gmm")->check(CLI::IsMember({"hier", "kmeans", "gmm"}));
  sub->add_option("--cutoff", a.cutoff, "dendrogram cut height in meters (hier)");
  sub->add_option("--k", a.k, "number of clusters");
  sub->add_option("--linkage", a.linkage, "single, complete or average (hier)");
  sub->add_option("--seed", a.seed, "seed for kmeans/gmm");
  sub->add_option("--restarts", a.restarts, "restarts for kmeans (10) or gmm (5)");
  sub->add_option("--reg", a.reg, "relative covariance floor for gmm");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vessel path classes from position-only voyage data"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));
  std::optional<int> threads;
  app.add_option("--threads", threads, "worker threads (default: VPATH_THREADS or all cores)");

  GenArgs gen;
  auto* s_gen = app.add_subcommand("gen", "generate the synthetic voyage set");
  s_gen->add_option("--config", gen.config, "generator config JSON")->check(CLI::ExistingFile);
  s_gen->add_option("--seed", gen.seed, "master seed");
  s_gen->add_option("--out", gen.out, "output directory")->required();
  s_gen->add_option("--novel", gen.novel, "also write this many novel-corridor voyages");

  StatsArgs stats;
  auto* s_stats = app.add_subcommand("stats", "per-class fuel, duration, distance and speed");
  s_stats->add_option("--voyages", stats.voyages)->required()->check(CLI::ExistingFile);
  s_stats->add_option("--labels", stats.labels)->required()->check(CLI::ExistingFile);
  s_stats->add_option("--out", stats.out, "statistics CSV (default: stdout)");

  DistArgs dist;
  auto* s_dist = app.add_subcommand("dist", "pairwise symmetric ANND matrix");
  s_dist->add_option("--voyages", dist.voyages)->required()->check(CLI::ExistingFile);
  s_dist->add_option("--out", dist.out, "matrix CSV")->required();
  s_dist->add_option("--directed", dist.directed, "also write the directed matrix");
  s_dist->add_flag("--serial", dist.serial, "single-threaded exhaustive reference");

  ClusterArgs cluster;
  auto* s_cluster = app.add_subcommand("cluster", "cluster a distance matrix");
  s_cluster->add_option("--matrix", cluster.matrix)->required()->check(CLI::ExistingFile);
  s_cluster->add_option("--out", cluster.out, "assignment CSV")->required();
  s_cluster->add_option("--dendrogram", cluster.dendrogram, "dendrogram JSON (hier)");
  add_cluster_options(s_cluster, cluster);

  SplitArgs split;
  auto* s_split = app.add_subcommand("split", "stratified train/test split of a labels file");
  s_split->add_option("--labels", split.labels)->required()->check(CLI::ExistingFile);
  s_split->add_option("--fraction", split.fraction, "training fraction per class");
  s_split->add_option("--seed", split.seed);
  s_split->add_option("--out", split.out, "output directory")->required();

  SegmentArgs segment;
  auto* s_segment = app.add_subcommand("segment", "fit per-segment mixtures and the signature map");
  s_segment->add_option("--voyages", segment.voyages)->required()->check(CLI::ExistingFile);
  s_segment->add_option("--labels", segment.labels, "training labels; other voyages are ignored")
      ->required()
      ->check(CLI::ExistingFile);
  s_segment->add_option("--segments", segment.segments);
  s_segment->add_option("--components", segment.components);
  s_segment->add_option("--seed", segment.seed);
  s_segment->add_option("--restarts", segment.restarts);
  s_segment->add_option("--out", segment.out, "model JSON")->required();

  ClassifyArgs classify;
  auto* s_classify = app.add_subcommand("classify", "label voyages with a fitted segment model");
  s_classify->add_option("--model", classify.model)->required()->check(CLI::ExistingFile);
  s_classify->add_option("--voyages", classify.voyages)->required()->check(CLI::ExistingFile);
  s_classify->add_option("--subset", classify.subset, "labels CSV naming the voyages to classify")
      ->check(CLI::ExistingFile);
  s_classify->add_option("--out", classify.out, "classification CSV")->required();

  EvalArgs eval;
  auto* s_eval = app.add_subcommand("eval", "precision/recall/F1 against truth labels");
  s_eval->add_option("--predicted", eval.predicted, "cluster assignment or label CSV")
      ->required()
      ->check(CLI::ExistingFile);
  s_eval->add_option("--truth", eval.truth)->required()->check(CLI::ExistingFile);
  s_eval->add_option("--json", eval.json, "metrics JSON");

  PipelineArgs pipeline;
  auto* s_pipeline = app.add_subcommand("pipeline", "gen, dist, cluster and eval in one run");
  s_pipeline->add_option("--config", pipeline.gen.config)->check(CLI::ExistingFile);
  s_pipeline->add_option("--out", pipeline.gen.out, "output directory")->required();
  add_cluster_options(s_pipeline, pipeline.cluster);
  s_pipeline->add_option("--generator-seed", pipeline.gen.seed, "generator master seed");

  try {
    app.parse(argc, argv);
    g_threads = threads ? *threads : threads_from_env();
    if (g_threads < 0) throw ParameterError("--threads must be nonnegative");
    apply_threads();
    if (*s_gen) cmd_gen(gen);
    else if (*s_stats) cmd_stats(stats);
    else if (*s_dist) cmd_dist(dist);
    else if (*s_cluster) cmd_cluster(cluster);
    else if (*s_split) cmd_split(split);
    else if (*s_segment) cmd_segment(segment);
    else if (*s_classify) cmd_classify(classify);
    else if (*s_eval) cmd_eval(eval);
    else if (*s_pipeline) cmd_pipeline(pipeline);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ParseError& e) {
    std::cerr << "vpath: error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << (e.column() ? ", column " + std::to_string(e.column()) : "") << ")";
    std::cerr << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "vpath: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "vpath: internal error: " << e.what() << "\n";
    return 1;
  }
}
