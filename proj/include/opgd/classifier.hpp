#pragma once

#include "opgd/core.hpp"
#include "opgd/optimizer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace opgd {

struct OpgdDiagnostics {
  int clamp_events = 0;
  int iterations = 0;
  std::string stop_reason;
  double initial_objective = 0;
  double final_objective = 0;
  bool init_fallback = false;
  double training_error = 0;
};

/// Fitted OPGD classifier. Component k lives in the projected space with mean
/// V^T mu_k and diagonal variances v_j^T Sigma_k v_j.
struct OpgdModel {
  Matrix projection;       // p x p', ordered, unit-norm columns
  Matrix projected_means;  // K x p'
  Matrix projected_vars;   // K x p'
  Vector priors;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  OpgdDiagnostics diagnostics;
  std::vector<double> trace;
};

struct Prediction {
  std::vector<int> labels;  // 0-based class indices
  Matrix posterior;         // m x K
};

/// Estimate, warm start (unless V0 is given), maximize, normalize and order.
OpgdModel fit_opgd(const Dataset& train, Index dim, const OptimConfig& config,
                   const std::optional<Matrix>& V0 = std::nullopt);

Prediction predict(const OpgdModel& model, const Matrix& X);

/// Projected parameters for a given V, so that a model can be rebuilt after
/// rescaling or permuting its columns.
OpgdModel project_model(const GaussianClassModel& model, const Matrix& V);

/// Posterior argmax with ties to the lowest class index.
std::vector<int> argmax_rows(const Matrix& scores);

double misclassification_count(const std::vector<int>& pred, const std::vector<int>& truth);

struct Features {
  Matrix V;             // unit-norm columns, leading first
  Vector eigenvalues;   // matching eigenvalues
  bool informative = true;  // false when the leading eigenvalue is numerically zero
};

/// Reduced-rank LDA directions: leading eigenvectors of (Sigma_W + ridge I)^{-1} Sigma_B.
/// Throws ConfigError unless 1 <= r <= K - 1.
Features lda_features(const ScatterMatrices& scatter, Index r, double ridge_frac = 1e-6);

/// SAVE directions: leading eigenvectors of sum_k pi_k (I - Sigma_k)^2 on sphered
/// data, mapped back to input coordinates.
Features save_features(const Dataset& data, Index r);

/// Full-covariance Gaussian discriminant rule with precomputed Cholesky factors.
struct GaussianRule {
  Vector log_priors;
  std::vector<Vector> means;
  std::vector<Matrix> chol_lower;  // L with L L^T = Sigma_k
  Vector log_dets;
  bool ridged = false;  // a ridge was needed to make some Sigma_k positive definite

  Matrix log_joint(const Matrix& X) const;  // log pi_k + log N(x; mu_k, Sigma_k)
};

GaussianRule make_gaussian_rule(const Vector& priors, const std::vector<Vector>& means,
                                const std::vector<Matrix>& covariances);

Prediction predict(const GaussianRule& rule, const Matrix& X);

/// Reduced-rank LDA classifier: nearest class centroid in the canonical space
/// (within-class covariance whitened), adjusted by log priors.
struct LdaModel {
  Matrix scaling;    // p x r, v^T (Sigma_W + ridge) v = 1 per column
  Matrix centroids;  // K x r
  Vector log_priors;
  Index rank = 0;
  bool informative = true;
};

LdaModel lda_fit(const Dataset& train, Index r, double ridge_frac = 1e-6);
Prediction lda_predict(const LdaModel& model, const Matrix& X);

/// RDA: Sigma_k(alpha) = alpha Sigma_k + (1 - alpha) Sigma_W.
struct RdaModel {
  double alpha = 0;
  GaussianRule rule;
};

RdaModel rda_fit(const Dataset& train, double alpha);
Prediction rda_predict(const RdaModel& model, const Matrix& X);

/// {0, 1/(p-1), ..., 1}; {0, 1} when p == 1.
std::vector<double> rda_grid(Index p);

/// SAVE features followed by a quadratic discriminant rule in the projected space.
struct SaveModel {
  Features features;
  GaussianRule rule;
};

SaveModel save_fit(const Dataset& train, Index r);
Prediction save_predict(const SaveModel& model, const Matrix& X);

}  // namespace opgd
