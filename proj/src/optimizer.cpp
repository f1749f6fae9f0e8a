#include "opgd/optimizer.hpp"

#include "opgd/errors.hpp"
#include "opgd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace opgd {

void validate(const OptimConfig& c) {
  if (c.max_iters < 0) throw ConfigError("max_iters must be non-negative");
  if (!(c.grad_tol > 0)) throw ConfigError("grad_tol must be positive");
  if (!(c.init_step > 0)) throw ConfigError("init_step must be positive");
  if (!(c.backtrack_factor > 0 && c.backtrack_factor < 1)) throw ConfigError("backtrack_factor must be in (0,1)");
  if (!(c.armijo_c > 0 && c.armijo_c < 1)) throw ConfigError("armijo_c must be in (0,1)");
  if (!(c.epsilon_init > 0)) throw ConfigError("epsilon must be positive");
  if (!(c.ridge_frac > 0)) throw ConfigError("ridge must be positive");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::LineSearchFailed: return "line_search_failed";
    case StopReason::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

namespace {

Matrix ridged_within(const ScatterMatrices& scatter, double ridge_frac) {
  const Index p = scatter.within.rows();
  const double tr = scatter.within.trace();
  const double ridge = ridge_frac * (tr > 0 ? tr / static_cast<double>(p) : 1.0);
  return scatter.within + ridge * Matrix::Identity(p, p);
}

// LDA directions for the first min(dim, K-1) columns, then principal components of
// the total covariance restricted to their orthogonal complement.
Matrix fallback_projection(const ScatterMatrices& scatter, Index dim, const OptimConfig& config) {
  const Index p = scatter.total.rows();
  const Index r = std::min<Index>(dim, std::max(0, scatter.num_classes - 1));
  Matrix V(p, dim);
  if (r > 0) V.leftCols(r) = leading_generalized_eigenvectors(scatter.between, ridged_within(scatter, config.ridge_frac), r);
  if (r < dim) {
    Matrix P = Matrix::Identity(p, p);
    if (r > 0) {
      const Eigen::HouseholderQR<Matrix> qr(V.leftCols(r));
      const Matrix Q = qr.householderQ() * Matrix::Identity(p, r);
      P -= Q * Q.transpose();
    }
    V.rightCols(dim - r) = leading_eigenvectors(P * scatter.total * P, dim - r);
  }
  return normalize_columns(V);
}

}  // namespace

InitResult init_projection(const ScatterMatrices& scatter, Index dim, const OptimConfig& config) {
  const Index p = scatter.total.rows();
  if (dim < 1 || dim > p) throw ConfigError("projection dimension must be in [1, p]");

  const Matrix W = ridged_within(scatter, config.ridge_frac);
  const Matrix M = W.ldlt().solve(scatter.between) + config.epsilon_init * scatter.total;

  InitResult out;
  Eigen::EigenSolver<Matrix> es;
  if (M.allFinite()) es.compute(M, true);
  if (!M.allFinite() || es.info() != Eigen::Success || !es.eigenvectors().allFinite()) {
    out.V = fallback_projection(scatter, dim, config);
    out.eigenvalues = Vector::Zero(dim);
    out.fallback = true;
    return out;
  }

  const Eigen::VectorXcd lambda = es.eigenvalues();
  std::vector<Index> order(p);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return lambda[a].real() > lambda[b].real(); });

  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  out.V.resize(p, dim);
  out.eigenvalues.resize(dim);
  std::vector<bool> used(p, false);
  Index col = 0;
  for (Index idx : order) {
    if (col == dim) break;
    if (used[idx]) continue;
    used[idx] = true;
    const Eigen::VectorXcd vec = es.eigenvectors().col(idx);
    out.V.col(col) = vec.real();
    out.eigenvalues[col++] = lambda[idx].real();
    if (std::abs(lambda[idx].imag()) > 1e-12 * scale) {
      // Skip the conjugate partner; the imaginary part completes the real basis.
      for (Index other : order)
        if (!used[other] && std::abs(lambda[other] - std::conj(lambda[idx])) <= 1e-10 * scale) {
          used[other] = true;
          break;
        }
      if (col < dim) {
        out.V.col(col) = vec.imag();
        out.eigenvalues[col++] = lambda[idx].real();
      }
    }
  }

  // Degenerate columns (repeated eigenvalues returned with parallel vectors) fall back.
  const Eigen::ColPivHouseholderQR<Matrix> rank_check(normalize_columns(out.V));
  if (rank_check.rank() < dim) {
    out.V = fallback_projection(scatter, dim, config);
    out.fallback = true;
    return out;
  }
  out.V = normalize_columns(out.V);
  return out;
}

AscentResult ascend(const ObjectiveFn& objective, const Matrix& V0, const OptimConfig& config,
                    const AscentOptions& options) {
  validate(config);
  if (!V0.allFinite()) throw NumericalError("initial projection has non-finite entries");
  AscentResult result;
  Matrix V = options.renormalize_columns ? normalize_columns(V0) : V0;
  Matrix G;
  double f = objective(V, &G);
  if (!std::isfinite(f)) throw NumericalError("objective is not finite at the initial projection");
  result.trace.push_back(f);

  double step = -1;  // set from the first gradient
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    result.iterations = iter;
    const double scaled = G.cwiseAbs().maxCoeff() / options.grad_scale;
    if (!(scaled > config.grad_tol)) {
      result.stop = StopReason::Converged;
      break;
    }
    const double g_norm = G.norm();
    if (step < 0) step = config.init_step / g_norm;
    const double min_move = 1e-14 * std::max(1.0, V.norm());

    bool accepted = false;
    Matrix trial;
    while (step * g_norm >= min_move) {
      trial = V + step * G;
      const double f_trial = objective(trial, nullptr);
      if (std::isfinite(f_trial) && f_trial >= f + config.armijo_c * step * g_norm * g_norm) {
        accepted = true;
        break;
      }
      step *= config.backtrack_factor;
    }
    if (!accepted) {
      result.stop = StopReason::LineSearchFailed;
      break;
    }
    if (options.renormalize_columns) trial = normalize_columns(trial);
    Matrix G_trial;
    const double f_new = objective(trial, &G_trial);
    if (!(f_new >= f)) {
      // Renormalisation moved the value below the previous iterate (rounding only).
      result.stop = StopReason::LineSearchFailed;
      break;
    }
    V = std::move(trial);
    G = std::move(G_trial);
    f = f_new;
    result.trace.push_back(f);
    step /= config.backtrack_factor;
    if (iter == config.max_iters) result.stop = StopReason::MaxIterations;
  }
  result.V = V;
  result.scaled_grad = G.cwiseAbs().maxCoeff() / options.grad_scale;
  return result;
}

AscentResult maximize(const Dataset& data, const GaussianClassModel& model, const Matrix& V0,
                      const OptimConfig& config) {
  const ObjectiveFn fn = [&](const Matrix& V, Matrix* grad) {
    ObjectiveValue v = evaluate_objective(data, V, model, grad != nullptr);
    if (grad) *grad = std::move(v.gradient);
    return v.value;
  };
  AscentOptions options;
  options.grad_scale = static_cast<double>(data.n());
  options.renormalize_columns = true;
  return ascend(fn, V0, config, options);
}

std::vector<Index> greedy_column_order(const Dataset& data, const Matrix& V, const GaussianClassModel& model) {
  const Index q = V.cols();
  std::vector<Index> chosen;
  std::vector<bool> used(q, false);
  Matrix current(V.rows(), 0);
  while (static_cast<Index>(chosen.size()) < q) {
    Index best = -1;
    double best_value = 0;
    for (Index j = 0; j < q; ++j) {
      if (used[j]) continue;
      Matrix candidate(V.rows(), current.cols() + 1);
      candidate << current, V.col(j);
      const double value = classification_log_likelihood(data, candidate, model);
      if (best < 0 || value > best_value) {
        best = j;
        best_value = value;
      }
    }
    used[best] = true;
    chosen.push_back(best);
    Matrix next(V.rows(), current.cols() + 1);
    next << current, V.col(best);
    current = std::move(next);
  }
  return chosen;
}

Matrix order_columns(const Dataset& data, const Matrix& V, const GaussianClassModel& model) {
  const std::vector<Index> order = greedy_column_order(data, V, model);
  Matrix out(V.rows(), V.cols());
  for (std::size_t j = 0; j < order.size(); ++j) out.col(static_cast<Index>(j)) = V.col(order[j]);
  return out;
}

}  // namespace opgd
