#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "vpath/annd.hpp"
#include "vpath/assignment.hpp"
#include "vpath/rng.hpp"

namespace vpath {

using FeatureMatrix = Eigen::MatrixXd; // one observation per row

/// Each path described by its distances to all paths.
FeatureMatrix matrix_rows(const DistanceMatrix& m);

/// D^2-weighted seeding: returns k distinct row indices.
std::vector<std::size_t> kmeanspp_seeds(const FeatureMatrix& x, std::size_t k, Rng& rng);

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  int threads = 0;
};

struct KMeansRun {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;          // k x d
  std::vector<double> wcss_trace;     // after every Lloyd iteration
  double wcss = 0.0;
  int iterations = 0;
  int reseeded = 0;                   // empty clusters re-seeded at the farthest point
};

/// One k-means++ seeded Lloyd run.
KMeansRun kmeans_single(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, int max_iterations);

struct KMeansResult {
  std::vector<int> labels; // raw labels of the best run
  double wcss = 0.0;
  int best_restart = 0;
  std::vector<KMeansRun> runs;
};

/// Best of `restarts` runs by within-cluster sum of squares; restart r uses
/// derive_seed(seed, r), so the result does not depend on thread count.
KMeansResult kmeans_fit(const FeatureMatrix& x, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options = {});

double wcss(const FeatureMatrix& x, const std::vector<int>& labels);

ClusterAssignment kmeans(const DistanceMatrix& m, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options = {});

} // namespace vpath
