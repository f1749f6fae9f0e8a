#pragma once

#include "opgd/core.hpp"
#include "opgd/optimizer.hpp"

#include <optional>
#include <vector>

namespace opgd {

/// Mixture weights, means and full covariances.
struct GmmModel : GaussianComponents {};

struct ClusterConfig {
  std::optional<double> lambda;  // orthonormality penalty; defaults to n
  int em_max_iters = 300;
  double em_tol = 1e-8;          // relative change in log-likelihood
  double cov_floor_frac = 1e-6;  // eigenvalue floor = cov_floor_frac * trace(total cov) / p
  std::uint64_t seed = 0;
  std::optional<double> pca_threshold;  // 0.999 when the pre-filter is enabled
};

void validate(const ClusterConfig& config);

struct GmmFit {
  GmmModel model;
  std::vector<double> loglik_trace;
  int iterations = 0;
  int reseeded = 0;  // components re-seeded after emptying out
};

/// Full-covariance EM from a k-means++ / Lloyd start drawn with `config.seed`.
/// Throws ConfigError when n < K.
GmmFit fit_gmm_em(const Matrix& X, int K, const ClusterConfig& config);

/// Mixture log-likelihood sum_i log sum_k w_k N(x_i; mu_k, Sigma_k).
double gmm_log_likelihood(const Matrix& X, const GaussianComponents& gmm);

/// n x K responsibilities.
Matrix gmm_responsibilities(const Matrix& X, const GaussianComponents& gmm);

/// Hard labels: argmax responsibility, ties to the lowest component.
std::vector<int> gmm_assign(const Matrix& X, const GaussianComponents& gmm);

/// ||V^T V - I||_F^2
double orthonormality_penalty(const Matrix& V);

/// sum_i log(max_l w_l phi_l / sum_l w_l phi_l) - lambda ||V^T V - I||_F^2 in the
/// projected diagonal-covariance model.
double cluster_objective(const Matrix& X, const Matrix& V, const GaussianComponents& gmm, double lambda);

/// Gradient of cluster_objective, treating the per-point argmax component as fixed.
Matrix grad_cluster_objective(const Matrix& X, const Matrix& V, const GaussianComponents& gmm, double lambda);

/// Value and optional gradient from one workspace.
double evaluate_cluster_objective(const Matrix& X, const Matrix& V, const GaussianComponents& gmm, double lambda,
                                  Matrix* grad);

struct EnhanceResult {
  Matrix V;                       // p x p'
  Matrix V0;                      // warm start
  std::vector<int> initial_labels;
  std::vector<int> labels;        // from the re-estimated projected model
  GmmModel projected_gmm;         // diagonal covariances in the p'-dimensional space
  AscentResult ascent;
  std::vector<double> em_trace;
};

/// Optimizes V for the given mixture, then re-estimates a diagonal-covariance
/// mixture on X V starting from the projected parameters.
EnhanceResult enhance_gmm(const Matrix& X, const GmmModel& gmm, Index dim, const ClusterConfig& config,
                          const OptimConfig& opt);

/// EM for a diagonal-covariance mixture from the given start. Variances are
/// floored at cov_floor_frac * mean column variance.
GmmFit fit_diag_gmm_em(const Matrix& Z, const GmmModel& start, const ClusterConfig& config);

struct PcaReduction {
  Matrix X;       // (X - mean) * basis
  Matrix basis;   // p x m, orthonormal columns, leading first
  Vector mean;
  Vector explained;  // eigenvalues, all p of them, decreasing
};

/// Keeps the fewest leading principal components whose cumulative share of the
/// total variance reaches `threshold`.
PcaReduction pca_prefilter(const Matrix& X, double threshold);

}  // namespace opgd
