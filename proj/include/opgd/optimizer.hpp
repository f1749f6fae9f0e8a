#pragma once

#include "opgd/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace opgd {

struct OptimConfig {
  int max_iters = 500;
  double grad_tol = 1e-6;  // on max |gradient entry| / n
  double init_step = 1.0;  // length of the first trial step in V-space
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  double epsilon_init = 1e-3;  // weight of the total covariance in the warm start
  double ridge_frac = 1e-6;    // ridge = ridge_frac * trace(Sigma_W) / p
  std::uint64_t seed = 0;
};

/// Throws ConfigError if a field is out of range.
void validate(const OptimConfig& config);

struct InitResult {
  Matrix V;             // unit-norm columns
  Vector eigenvalues;   // real parts, leading first
  bool fallback = false;  // eigen-solve failed; LDA + principal components used instead
};

/// Warm start from the leading eigenvectors of (Sigma_W + ridge I)^{-1} Sigma_B + eps Sigma.
/// The matrix is not symmetric; a complex pair contributes the real and imaginary
/// parts of its eigenvector, which span the same real invariant subspace.
InitResult init_projection(const ScatterMatrices& scatter, Index dim, const OptimConfig& config);

enum class StopReason { Converged, LineSearchFailed, MaxIterations };

std::string to_string(StopReason reason);

struct AscentResult {
  Matrix V;
  std::vector<double> trace;  // objective at V0 followed by every accepted iterate
  int iterations = 0;
  StopReason stop = StopReason::MaxIterations;
  double scaled_grad = 0;  // max |gradient| / scale at the returned V
};

/// Objective value at V; writes the gradient when `grad` is non-null.
using ObjectiveFn = std::function<double(const Matrix& V, Matrix* grad)>;

struct AscentOptions {
  double grad_scale = 1.0;           // divides the gradient in the stopping test
  bool renormalize_columns = false;  // for objectives invariant to column scale
};

/// Gradient ascent with Armijo backtracking. The trace never decreases.
AscentResult ascend(const ObjectiveFn& objective, const Matrix& V0, const OptimConfig& config,
                    const AscentOptions& options);

/// Maximizes the classification log-likelihood from V0.
/// Throws NumericalError when the objective is not finite at V0.
AscentResult maximize(const Dataset& data, const GaussianClassModel& model, const Matrix& V0,
                      const OptimConfig& config);

/// Greedy order: the best single column first, then repeatedly the column that
/// most increases the likelihood of the columns chosen so far. Ties go to the
/// lowest original index.
std::vector<Index> greedy_column_order(const Dataset& data, const Matrix& V, const GaussianClassModel& model);

Matrix order_columns(const Dataset& data, const Matrix& V, const GaussianClassModel& model);

}  // namespace opgd
