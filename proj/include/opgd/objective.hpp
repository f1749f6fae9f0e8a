#pragma once

#include "opgd/core.hpp"

namespace opgd {

/// Per-evaluation intermediates of the projected Gaussian model at a fixed V.
///
/// Component k of the projected model has mean V^T mu_k and diagonal covariance
/// diag(v_j^T Sigma_k v_j). Projected variances are floored at
/// 1e-12 * trace(Sigma_k) / p * |v_j|^2, so the floor moves with column scale
/// and the objective keeps its scale invariance.
struct GradientWorkspace {
  Matrix projected;      // X V, n x p'
  Matrix proj_means;     // K x p'
  Matrix proj_vars;      // K x p', v_j^T Sigma_k v_j after flooring
  Matrix log_dens;       // n x K, log phi_V^(k)(V^T x_i)
  Vector log_norm;       // n, log sum_l pi_l phi_V^(l)(V^T x_i)
  Matrix posteriors;     // n x K, p_ik(V)
  int clamp_events = 0;  // number of floored projected variances
};

GradientWorkspace make_workspace(const Matrix& X, const Matrix& V, const GaussianComponents& comps);

/// Log density of V^T x under N(V^T mean, diag(v_j^T cov v_j)).
/// `clamp_events`, when given, is incremented for every floored variance.
double log_density_projected(const Vector& x, const Matrix& V, const Vector& mean, const Matrix& cov,
                             int* clamp_events = nullptr);

/// d/dV log phi_V(V^T x): column j is
/// (1/s_j) ((alpha_j - 1) cov - (x - mean)(x - mean)^T) v_j, with s_j = v_j^T cov v_j.
Matrix grad_log_density_projected(const Vector& x, const Matrix& V, const Vector& mean, const Matrix& cov);

/// Posterior matrix p_ik(V), computed in the log domain.
Matrix posteriors(const Dataset& data, const Matrix& V, const GaussianComponents& model);

/// l(V) = sum_i log p_{i, y_i}(V).
double classification_log_likelihood(const Dataset& data, const Matrix& V, const GaussianClassModel& model);

/// Closed form c - 1/2 sum_k n_k sum_t log(v_t^T Sigma_k v_t), c = -n p' (log(2 pi) + 1) / 2.
/// Valid when `model` is the maximum likelihood fit to `data`.
double ell1(const Dataset& data, const Matrix& V, const GaussianClassModel& model);

/// sum_i log phi_V^(y_i)(V^T x_i) summed directly; reference for ell1.
double ell1_direct(const Dataset& data, const Matrix& V, const GaussianClassModel& model);

double ell2(const Dataset& data, const Matrix& V, const GaussianComponents& model);

/// sum_i log(pi_{y_i}); independent of V.
double log_prior_term(const Dataset& data, const GaussianClassModel& model);

Matrix grad_ell1(const Dataset& data, const Matrix& V, const GaussianClassModel& model);
Matrix grad_ell2(const Dataset& data, const Matrix& V, const GaussianComponents& model);
Matrix grad_objective(const Dataset& data, const Matrix& V, const GaussianClassModel& model);

/// S_k(V) = sum_i w_ik (x_i - mu_k)(x_i - mu_k)^T for each component.
std::vector<Matrix> weighted_scatter(const Matrix& X, const GaussianComponents& comps, const Matrix& weights);

/// sum_i sum_k w_ik d/dV log phi_V^(k)(V^T x_i), evaluated through the S_k(V) reduction.
/// With w = posteriors this is d ell2 / dV.
Matrix weighted_log_density_gradient(const Matrix& X, const Matrix& V, const GaussianComponents& comps,
                                     const Matrix& weights, const Matrix& proj_vars);

struct ObjectiveValue {
  double value = 0;  // l(V) including the prior term
  double ell1 = 0;
  double ell2 = 0;
  double prior_term = 0;
  Matrix gradient;  // empty unless requested
  int clamp_events = 0;
};

/// Value (and optionally gradient) of l(V) sharing one workspace.
ObjectiveValue evaluate_objective(const Dataset& data, const Matrix& V, const GaussianClassModel& model,
                                  bool with_gradient);

}  // namespace opgd
