#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "vpath/annd.hpp"
#include "vpath/assignment.hpp"
#include "vpath/kmeans.hpp"

namespace vpath {

struct GaussianComponent {
  double weight = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;

  std::size_t size() const noexcept { return components.size(); }
  Eigen::Index dimension() const { return components.empty() ? 0 : components.front().mean.size(); }
};

/// Weights sum to 1, consistent dimensions, symmetric positive-definite covariances.
void validate(const GaussianMixture& g);

struct GmmOptions {
  int restarts = 5;
  int max_iterations = 200;
  double tolerance = 1e-6;      // per-point log-likelihood gain
  double regularization = 1e-6; // eigenvalue floor, relative to trace(data covariance)/d
  int threads = 0;
};

struct GmmRun {
  GaussianMixture model;
  std::vector<double> loglik_trace; // mean per-point log-likelihood, initial model first
  int iterations = 0;
  bool converged = false;
};

struct GmmResult {
  GaussianMixture model;
  double mean_loglik = 0.0;
  int best_restart = 0;
  std::vector<GmmRun> runs;
};

/// Precomputed Cholesky factors for repeated density evaluation.
class MixtureEvaluator {
public:
  explicit MixtureEvaluator(const GaussianMixture& g);

  std::size_t size() const noexcept { return log_weights_.size(); }

  /// n x K matrix of log(weight_c) + log N(x_i; mean_c, cov_c).
  Eigen::MatrixXd weighted_log_densities(const FeatureMatrix& x) const;
  /// Per-row log-likelihood; responsibilities written to `resp` when non-null.
  Eigen::VectorXd log_likelihood(const FeatureMatrix& x, Eigen::MatrixXd* resp = nullptr) const;

  double log_likelihood(const Eigen::VectorXd& p) const;
  Eigen::VectorXd responsibilities(const Eigen::VectorXd& p) const;

private:
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::MatrixXd> lower_; // Cholesky factor L, cov = L L^T
  std::vector<double> log_norm_;       // -0.5 (d log 2pi + log det)
  std::vector<double> log_weights_;
};

/// Single EM run started from a k-means++ seeded Lloyd partition.
GmmRun gmm_fit_single(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, const GmmOptions& options = {});

/// Best of options.restarts runs by final log-likelihood; restart r uses derive_seed(seed, r).
GmmResult gmm_fit_report(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, const GmmOptions& options = {});

GaussianMixture gmm_fit(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, const GmmOptions& options = {});

double gmm_log_likelihood(const GaussianMixture& g, const Eigen::VectorXd& p);
Eigen::VectorXd gmm_responsibilities(const GaussianMixture& g, const Eigen::VectorXd& p);

/// Argmax-responsibility labels (lowest index on ties).
std::vector<int> gmm_predict(const GaussianMixture& g, const FeatureMatrix& x);

/// Eigenvalue floor used for distance-matrix rows, where the dimension equals
/// the number of points and a 1e-6 floor lets components collapse onto single rows.
inline constexpr double kRowRegularization = 1e-2;

ClusterAssignment gmm_cluster(const DistanceMatrix& m, std::size_t k, std::uint64_t seed,
                              const GmmOptions& options = {.regularization = kRowRegularization});

} // namespace vpath
