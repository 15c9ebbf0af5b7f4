#include "vpath/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vpath/error.hpp"

namespace vpath {

FeatureMatrix matrix_rows(const DistanceMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  FeatureMatrix x(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      x(i, j) = m.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return x;
}

std::vector<std::size_t> kmeanspp_seeds(const FeatureMatrix& x, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (k < 1 || k > n) throw ParameterError("k must be in [1, number of rows]");
  std::vector<std::size_t> seeds;
  seeds.reserve(k);
  std::vector<bool> chosen(n, false);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  seeds.push_back(first(rng));
  chosen[seeds.back()] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(seeds[0]))).squaredNorm();
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (seeds.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] == 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    }
    if (pick == n) {
      // Only duplicates of existing seeds remain.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    seeds.push_back(pick);
    chosen[pick] = true;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) -
                               x.row(static_cast<Eigen::Index>(pick))).squaredNorm());
    }
  }
  return seeds;
}

double wcss(const FeatureMatrix& x, const std::vector<int>& labels) {
  std::map<int, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
  double total = 0.0;
  for (const auto& [label, rows] : members) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
    for (auto r : rows) mean += x.row(r);
    mean /= static_cast<double>(rows.size());
    for (auto r : rows) total += (x.row(r) - mean).squaredNorm();
  }
  return total;
}

namespace {

void update_centroids(const FeatureMatrix& x, const std::vector<int>& labels, Eigen::MatrixXd& centroids,
                      std::vector<std::size_t>& counts) {
  centroids.setZero();
  std::fill(counts.begin(), counts.end(), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto c = labels[static_cast<std::size_t>(i)];
    centroids.row(c) += x.row(i);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
  }
}

double current_wcss(const FeatureMatrix& x, const std::vector<int>& labels, const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    total += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

} // namespace

KMeansRun kmeans_single(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, int max_iterations) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (k < 1 || k > n) {
    throw ParameterError("k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  Rng rng(seed);
  const auto seeds = kmeanspp_seeds(x, k, rng);
  KMeansRun run;
  run.centroids.resize(static_cast<Eigen::Index>(k), x.cols());
  for (std::size_t c = 0; c < k; ++c) run.centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(seeds[c]));
  run.labels.assign(n, -1);
  std::vector<std::size_t> counts(k, 0);

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (x.row(static_cast<Eigen::Index>(i)) - run.centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (run.labels[i] != best) {
        run.labels[i] = best;
        changed = true;
      }
    }
    update_centroids(x, run.labels, run.centroids, counts);
    // Empty cluster: move its centroid onto the point farthest from its own centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(run.labels[i])] <= 1) continue;
        const double d = (x.row(static_cast<Eigen::Index>(i)) - run.centroids.row(run.labels[i])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      run.labels[far] = static_cast<int>(c);
      update_centroids(x, run.labels, run.centroids, counts);
      ++run.reseeded;
      changed = true;
    }
    run.wcss_trace.push_back(current_wcss(x, run.labels, run.centroids));
    run.iterations = iter + 1;
    if (!changed) break;
  }
  run.wcss = run.wcss_trace.back();
  return run;
}

KMeansResult kmeans_fit(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  if (options.restarts < 1) throw ParameterError("restarts must be at least 1");
  const auto n = static_cast<std::size_t>(x.rows());
  if (k < 1 || k > n) {
    throw ParameterError("k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  KMeansResult result;
  result.runs.resize(static_cast<std::size_t>(options.restarts));
  int threads = options.threads;
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#endif
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int r = 0; r < options.restarts; ++r) {
    result.runs[static_cast<std::size_t>(r)] =
        kmeans_single(x, k, derive_seed(seed, static_cast<std::uint64_t>(r)), options.max_iterations);
  }
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    if (r == 0 || result.runs[r].wcss < result.wcss) {
      result.wcss = result.runs[r].wcss;
      result.best_restart = static_cast<int>(r);
    }
  }
  result.labels = result.runs[static_cast<std::size_t>(result.best_restart)].labels;
  return result;
}

ClusterAssignment kmeans(const DistanceMatrix& m, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  const auto fit = kmeans_fit(matrix_rows(m), k, seed, options);
  return canonical_assignment(m.ids, fit.labels);
}

} // namespace vpath
