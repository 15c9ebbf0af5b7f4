#include "vpath/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vpath/error.hpp"

namespace vpath {

void validate(const GaussianMixture& g) {
  if (g.components.empty()) throw ValidationError("mixture has no components");
  const auto d = g.dimension();
  double total = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const auto& comp = g.components[c];
    const auto tag = "component " + std::to_string(c);
    if (!(comp.weight >= 0.0) || !std::isfinite(comp.weight)) throw ValidationError(tag + ": invalid weight");
    if (comp.mean.size() != d || comp.covariance.rows() != d || comp.covariance.cols() != d) {
      throw ValidationError(tag + ": dimension mismatch");
    }
    if (!comp.mean.allFinite() || !comp.covariance.allFinite()) throw ValidationError(tag + ": non-finite parameters");
    if (!comp.covariance.isApprox(comp.covariance.transpose(), 1e-12)) {
      throw ValidationError(tag + ": covariance not symmetric");
    }
    if (comp.covariance.llt().info() != Eigen::Success) {
      throw ValidationError(tag + ": covariance not positive definite");
    }
    total += comp.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("mixture weights do not sum to 1");
}

MixtureEvaluator::MixtureEvaluator(const GaussianMixture& g) {
  const auto d = static_cast<double>(g.dimension());
  for (const auto& comp : g.components) {
    Eigen::LLT<Eigen::MatrixXd> llt(comp.covariance);
    if (llt.info() != Eigen::Success) throw ValidationError("covariance not positive definite");
    Eigen::MatrixXd lower = llt.matrixL();
    const double log_det = 2.0 * lower.diagonal().array().log().sum();
    means_.push_back(comp.mean);
    lower_.push_back(std::move(lower));
    log_norm_.push_back(-0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det));
    log_weights_.push_back(comp.weight > 0.0 ? std::log(comp.weight) : -std::numeric_limits<double>::infinity());
  }
}

Eigen::MatrixXd MixtureEvaluator::weighted_log_densities(const FeatureMatrix& x) const {
  const auto k = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd out(x.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    Eigen::MatrixXd centered = (x.rowwise() - means_[cc].transpose()).transpose();
    lower_[cc].triangularView<Eigen::Lower>().solveInPlace(centered);
    const Eigen::VectorXd quad = centered.colwise().squaredNorm().transpose();
    out.col(c) = (log_weights_[cc] + log_norm_[cc]) - 0.5 * quad.array();
  }
  return out;
}

Eigen::VectorXd MixtureEvaluator::log_likelihood(const FeatureMatrix& x, Eigen::MatrixXd* resp) const {
  const Eigen::MatrixXd ld = weighted_log_densities(x);
  Eigen::VectorXd ll(x.rows());
  if (resp) resp->resize(x.rows(), ld.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double top = ld.row(i).maxCoeff();
    if (!std::isfinite(top)) {
      ll(i) = top;
      if (resp) resp->row(i).setConstant(1.0 / static_cast<double>(ld.cols()));
      continue;
    }
    const Eigen::RowVectorXd e = (ld.row(i).array() - top).exp().matrix();
    const double s = e.sum();
    ll(i) = top + std::log(s);
    if (resp) resp->row(i) = e / s;
  }
  return ll;
}

double MixtureEvaluator::log_likelihood(const Eigen::VectorXd& p) const {
  return log_likelihood(FeatureMatrix(p.transpose()))(0);
}

Eigen::VectorXd MixtureEvaluator::responsibilities(const Eigen::VectorXd& p) const {
  Eigen::MatrixXd resp;
  log_likelihood(FeatureMatrix(p.transpose()), &resp);
  return resp.row(0).transpose();
}

namespace {

Eigen::MatrixXd sample_covariance(const FeatureMatrix& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(x.rows());
}

/// Closest covariance (in likelihood) with every eigenvalue >= floor.
Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& cov, double floor) {
  const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

std::size_t distinct_rows(const FeatureMatrix& x) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(x(i, j));
  }
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

double covariance_floor(const FeatureMatrix& x, double regularization) {
  const double trace = sample_covariance(x).trace();
  const double floor = regularization * trace / static_cast<double>(x.cols());
  return floor > 0.0 ? floor : 1e-9;
}

void check_fit_inputs(const FeatureMatrix& x, std::size_t k, const GmmOptions& options) {
  if (k < 1) throw ParameterError("number of components must be at least 1");
  if (options.max_iterations < 1) throw ParameterError("max_iterations must be at least 1");
  if (options.restarts < 1) throw ParameterError("restarts must be at least 1");
  if (!(options.tolerance >= 0.0)) throw ParameterError("tolerance must be nonnegative");
  if (!(options.regularization > 0.0)) throw ParameterError("regularization must be positive");
  if (x.rows() == 0 || x.cols() == 0) throw FitError("no points to fit");
  if (!x.allFinite()) throw FitError("non-finite input point");
  const auto distinct = distinct_rows(x);
  if (distinct < k) {
    throw FitError("need at least " + std::to_string(k) + " distinct points, got " + std::to_string(distinct));
  }
}

} // namespace

GmmRun gmm_fit_single(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, const GmmOptions& options) {
  check_fit_inputs(x, k, options);
  const auto n = x.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  const double floor = covariance_floor(x, options.regularization);
  const double tiny = 1e-12 * static_cast<double>(n);

  // Means, covariances and weights from a k-means++ seeded Lloyd partition.
  const auto init = kmeans_single(x, k, seed, 100);
  const Eigen::MatrixXd global = floor_eigenvalues(sample_covariance(x), floor);

  GmmRun run;
  run.model.components.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (init.labels[static_cast<std::size_t>(i)] == static_cast<int>(c)) rows.push_back(i);
    }
    auto& comp = run.model.components[c];
    comp.weight = static_cast<double>(rows.size()) / static_cast<double>(n);
    comp.mean = init.centroids.row(static_cast<Eigen::Index>(c)).transpose();
    if (rows.size() < 2) {
      comp.covariance = global;
      continue;
    }
    FeatureMatrix members(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) members.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
    comp.covariance = floor_eigenvalues(sample_covariance(members), floor);
  }

  Eigen::MatrixXd resp;
  double current = MixtureEvaluator(run.model).log_likelihood(x, &resp).mean();
  run.loglik_trace.push_back(current);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    for (Eigen::Index c = 0; c < kk; ++c) {
      auto& comp = run.model.components[static_cast<std::size_t>(c)];
      comp.weight = nk(c) / static_cast<double>(n);
      if (nk(c) < tiny) continue; // effectively empty: keep mean and covariance
      comp.mean = (resp.col(c).transpose() * x).transpose() / nk(c);
      const Eigen::MatrixXd centered = x.rowwise() - comp.mean.transpose();
      const Eigen::MatrixXd scatter =
          centered.transpose() * resp.col(c).asDiagonal() * centered / nk(c);
      comp.covariance = floor_eigenvalues(scatter, floor);
    }
    double total = 0.0;
    for (const auto& comp : run.model.components) total += comp.weight;
    for (auto& comp : run.model.components) comp.weight /= total;

    const double next = MixtureEvaluator(run.model).log_likelihood(x, &resp).mean();
    run.loglik_trace.push_back(next);
    run.iterations = iter + 1;
    const double gain = next - current;
    current = next;
    if (gain < options.tolerance) {
      run.converged = true;
      break;
    }
  }
  return run;
}

GmmResult gmm_fit_report(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, const GmmOptions& options) {
  check_fit_inputs(x, k, options);
  GmmResult result;
  result.runs.resize(static_cast<std::size_t>(options.restarts));
  int threads = options.threads;
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#endif
  std::vector<std::string> failures(result.runs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int r = 0; r < options.restarts; ++r) {
    try {
      result.runs[static_cast<std::size_t>(r)] =
          gmm_fit_single(x, k, derive_seed(seed, static_cast<std::uint64_t>(r)), options);
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(r)] = e.what();
    }
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw FitError(f);
  }
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const double ll = result.runs[r].loglik_trace.back();
    if (r == 0 || ll > result.mean_loglik) {
      result.mean_loglik = ll;
      result.best_restart = static_cast<int>(r);
    }
  }
  result.model = result.runs[static_cast<std::size_t>(result.best_restart)].model;
  return result;
}

GaussianMixture gmm_fit(const FeatureMatrix& x, std::size_t k, std::uint64_t seed, const GmmOptions& options) {
  return gmm_fit_report(x, k, seed, options).model;
}

double gmm_log_likelihood(const GaussianMixture& g, const Eigen::VectorXd& p) {
  if (p.size() != g.dimension()) throw PreconditionError("point dimension does not match mixture");
  return MixtureEvaluator(g).log_likelihood(p);
}

Eigen::VectorXd gmm_responsibilities(const GaussianMixture& g, const Eigen::VectorXd& p) {
  if (p.size() != g.dimension()) throw PreconditionError("point dimension does not match mixture");
  return MixtureEvaluator(g).responsibilities(p);
}

std::vector<int> gmm_predict(const GaussianMixture& g, const FeatureMatrix& x) {
  if (x.cols() != g.dimension()) throw PreconditionError("point dimension does not match mixture");
  const Eigen::MatrixXd ld = MixtureEvaluator(g).weighted_log_densities(x);
  std::vector<int> labels(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < ld.cols(); ++c) {
      if (ld(i, c) > ld(i, best)) best = c;
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

ClusterAssignment gmm_cluster(const DistanceMatrix& m, std::size_t k, std::uint64_t seed, const GmmOptions& options) {
  const auto x = matrix_rows(m);
  const auto model = gmm_fit(x, k, seed, options);
  return canonical_assignment(m.ids, gmm_predict(model, x));
}

} // namespace vpath
