#include "opgd/clustering.hpp"

#include "opgd/classifier.hpp"
#include "opgd/errors.hpp"
#include "opgd/objective.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace opgd {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Clamps eigenvalues below `floor`; leaves well-conditioned matrices untouched.
Matrix floor_covariance(const Matrix& S, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  if (es.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  if (es.eigenvalues().minCoeff() >= floor) return symmetrize(S);
  const Vector clamped = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose());
}

Matrix component_log_joint(const Matrix& X, const GaussianComponents& gmm) {
  return make_gaussian_rule(gmm.weights, gmm.means, gmm.covariances).log_joint(X);
}

// k-means++ seeding followed by Lloyd iterations.
std::vector<int> kmeans_assign(const Matrix& X, int K, std::mt19937_64& rng) {
  const Index n = X.rows();
  Matrix centers(K, X.cols());
  centers.row(0) = X.row(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
  Vector d2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < K; ++k) {
    const double total = d2.sum();
    Index pick = 0;
    if (total > 0) {
      double u = uniform01(rng) * total;
      for (pick = 0; pick < n - 1; ++pick) {
        u -= d2[pick];
        if (u < 0) break;
      }
    } else {
      pick = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    }
    centers.row(k) = X.row(pick);
    d2 = d2.cwiseMin((X.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const Eigen::RowVectorXd dist = -(centers.rowwise() - X.row(i)).rowwise().squaredNorm().transpose();
      const int k = static_cast<int>(argmax(dist));
      if (k != assign[i]) {
        assign[i] = k;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(K, X.cols());
    std::vector<Index> counts(K, 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += X.row(i);
      ++counts[assign[i]];
    }
    for (int k = 0; k < K; ++k)
      if (counts[k] > 0) centers.row(k) = sums.row(k) / static_cast<double>(counts[k]);
  }
  return assign;
}

}  // namespace

void validate(const ClusterConfig& c) {
  if (c.lambda && !(*c.lambda >= 0)) throw ConfigError("lambda must be non-negative");
  if (c.em_max_iters < 0) throw ConfigError("em_max_iters must be non-negative");
  if (!(c.em_tol > 0)) throw ConfigError("em_tol must be positive");
  if (!(c.cov_floor_frac > 0)) throw ConfigError("cov_floor must be positive");
  if (c.pca_threshold && !(*c.pca_threshold > 0 && *c.pca_threshold <= 1))
    throw ConfigError("pca threshold must be in (0, 1]");
}

double gmm_log_likelihood(const Matrix& X, const GaussianComponents& gmm) {
  const Matrix lj = component_log_joint(X, gmm);
  double ll = 0;
  for (Index i = 0; i < X.rows(); ++i) ll += log_sum_exp(lj.row(i));
  return ll;
}

Matrix gmm_responsibilities(const Matrix& X, const GaussianComponents& gmm) {
  const Matrix lj = component_log_joint(X, gmm);
  Matrix r(lj.rows(), lj.cols());
  for (Index i = 0; i < lj.rows(); ++i) r.row(i) = (lj.row(i).array() - log_sum_exp(lj.row(i))).exp().matrix();
  return r;
}

std::vector<int> gmm_assign(const Matrix& X, const GaussianComponents& gmm) {
  return argmax_rows(component_log_joint(X, gmm));
}

GmmFit fit_gmm_em(const Matrix& X, int K, const ClusterConfig& config) {
  validate(config);
  const Index n = X.rows();
  const Index p = X.cols();
  if (K < 1 || n < K) throw ConfigError("need 1 <= K <= n for mixture fitting");
  if (!X.allFinite()) throw DataError("data contain non-finite entries");

  const Matrix total_cov = covariance_mle(X);
  const double floor = std::max(config.cov_floor_frac * total_cov.trace() / static_cast<double>(p),
                                std::numeric_limits<double>::min());

  std::mt19937_64 rng(config.seed);
  const std::vector<int> start = kmeans_assign(X, K, rng);

  GmmFit fit;
  GmmModel& m = fit.model;
  m.weights.resize(K);
  m.means.assign(K, Vector::Zero(p));
  m.covariances.assign(K, total_cov);
  {
    std::vector<Index> counts(K, 0);
    for (Index i = 0; i < n; ++i) {
      m.means[start[i]] += X.row(i).transpose();
      ++counts[start[i]];
    }
    for (int k = 0; k < K; ++k) {
      m.weights[k] = std::max<double>(static_cast<double>(counts[k]), 1.0);
      if (counts[k] > 0) m.means[k] /= static_cast<double>(counts[k]);
      if (counts[k] > 1) {
        Matrix S = Matrix::Zero(p, p);
        for (Index i = 0; i < n; ++i)
          if (start[i] == k) {
            const Vector d = X.row(i).transpose() - m.means[k];
            S += d * d.transpose();
          }
        m.covariances[k] = floor_covariance(S / static_cast<double>(counts[k]), floor);
      }
    }
    m.weights /= m.weights.sum();
  }

  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.em_max_iters; ++iter) {
    fit.iterations = iter + 1;
    const Matrix lj = component_log_joint(X, m);
    Vector log_norm(n);
    Matrix resp(n, K);
    for (Index i = 0; i < n; ++i) {
      log_norm[i] = log_sum_exp(lj.row(i));
      resp.row(i) = (lj.row(i).array() - log_norm[i]).exp().matrix();
    }
    const double ll = log_norm.sum();
    fit.loglik_trace.push_back(ll);
    if (std::abs(ll - prev) <= config.em_tol * std::abs(ll)) break;
    prev = ll;

    for (int k = 0; k < K; ++k) {
      const double mass = resp.col(k).sum();
      if (mass < 1e-8) {
        // Re-seed at the worst-explained observation.
        Index worst = 0;
        for (Index i = 1; i < n; ++i)
          if (log_norm[i] < log_norm[worst]) worst = i;
        m.means[k] = X.row(worst).transpose();
        m.covariances[k] = floor_covariance(total_cov, floor);
        m.weights[k] = 1.0 / static_cast<double>(n);
        ++fit.reseeded;
        continue;
      }
      m.weights[k] = mass / static_cast<double>(n);
      m.means[k] = (resp.col(k).transpose() * X).transpose() / mass;
      const Matrix centered = X.rowwise() - m.means[k].transpose();
      const Matrix S = centered.transpose() * (resp.col(k).asDiagonal() * centered) / mass;
      m.covariances[k] = floor_covariance(S, floor);
    }
    m.weights /= m.weights.sum();
  }
  return fit;
}

double orthonormality_penalty(const Matrix& V) {
  return (V.transpose() * V - Matrix::Identity(V.cols(), V.cols())).squaredNorm();
}

double evaluate_cluster_objective(const Matrix& X, const Matrix& V, const GaussianComponents& gmm, double lambda,
                                  Matrix* grad) {
  const GradientWorkspace ws = make_workspace(X, V, gmm);
  const Eigen::RowVectorXd log_w = gmm.weights.array().log().matrix().transpose();
  const Index n = X.rows();
  Matrix hard = Matrix::Zero(n, gmm.size());
  double first = 0;
  for (Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd joint = ws.log_dens.row(i) + log_w;
    const Index best = argmax(joint);
    hard(i, best) = 1.0;
    first += std::min(0.0, joint[best] - ws.log_norm[i]);
  }
  const Matrix gram_gap = V.transpose() * V - Matrix::Identity(V.cols(), V.cols());
  if (grad) {
    *grad = weighted_log_density_gradient(X, V, gmm, hard - ws.posteriors, ws.proj_vars) -
            4.0 * lambda * V * gram_gap;
  }
  return first - lambda * gram_gap.squaredNorm();
}

double cluster_objective(const Matrix& X, const Matrix& V, const GaussianComponents& gmm, double lambda) {
  return evaluate_cluster_objective(X, V, gmm, lambda, nullptr);
}

Matrix grad_cluster_objective(const Matrix& X, const Matrix& V, const GaussianComponents& gmm, double lambda) {
  Matrix G;
  evaluate_cluster_objective(X, V, gmm, lambda, &G);
  return G;
}

GmmFit fit_diag_gmm_em(const Matrix& Z, const GmmModel& start, const ClusterConfig& config) {
  const Index n = Z.rows();
  const Index q = Z.cols();
  const int K = start.size();
  const Vector col_var = (Z.rowwise() - Z.colwise().mean()).colwise().squaredNorm().transpose() / static_cast<double>(n);
  const double floor = std::max(config.cov_floor_frac * col_var.mean(), std::numeric_limits<double>::min());

  Vector weights = start.weights;
  Matrix means(K, q);
  Matrix vars(K, q);
  for (int k = 0; k < K; ++k) {
    means.row(k) = start.means[k].transpose();
    vars.row(k) = start.covariances[k].diagonal().transpose().cwiseMax(floor);
  }

  GmmFit fit;
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.em_max_iters; ++iter) {
    fit.iterations = iter + 1;
    Matrix lj(n, K);
    for (int k = 0; k < K; ++k) {
      const double c = std::log(weights[k]) - 0.5 * (static_cast<double>(q) * kLog2Pi + vars.row(k).array().log().sum());
      lj.col(k) = (c - 0.5 * ((Z.rowwise() - means.row(k)).array().square().rowwise() / vars.row(k).array()).rowwise().sum()).matrix();
    }
    Vector log_norm(n);
    Matrix resp(n, K);
    for (Index i = 0; i < n; ++i) {
      log_norm[i] = log_sum_exp(lj.row(i));
      resp.row(i) = (lj.row(i).array() - log_norm[i]).exp().matrix();
    }
    const double ll = log_norm.sum();
    fit.loglik_trace.push_back(ll);
    if (std::abs(ll - prev) <= config.em_tol * std::abs(ll)) break;
    prev = ll;
    for (int k = 0; k < K; ++k) {
      const double mass = resp.col(k).sum();
      if (mass < 1e-8) continue;  // keeps its parameters; weight decays towards zero
      weights[k] = mass / static_cast<double>(n);
      means.row(k) = resp.col(k).transpose() * Z / mass;
      vars.row(k) = ((resp.col(k).transpose() * (Z.rowwise() - means.row(k)).array().square().matrix()) / mass)
                        .cwiseMax(floor);
    }
    weights /= weights.sum();
  }

  GmmModel& m = fit.model;
  m.weights = weights;
  for (int k = 0; k < K; ++k) {
    m.means.push_back(means.row(k).transpose());
    m.covariances.push_back(vars.row(k).transpose().asDiagonal());
  }
  return fit;
}

EnhanceResult enhance_gmm(const Matrix& X, const GmmModel& gmm, Index dim, const ClusterConfig& config,
                          const OptimConfig& opt) {
  validate(config);
  validate(opt);
  const Index n = X.rows();
  const Index p = X.cols();
  if (dim < 1 || dim > p) throw ConfigError("projected dimension must be in [1, p]");
  if (gmm.dim() != p) throw ConfigError("mixture dimension does not match the data");
  const double lambda = config.lambda.value_or(static_cast<double>(n));

  EnhanceResult out;
  out.initial_labels = gmm_assign(X, gmm);

  const ScatterMatrices scatter = scatter_from_assignments(X, out.initial_labels, gmm.size());
  const Matrix warm = init_projection(scatter, dim, opt).V;
  const Eigen::HouseholderQR<Matrix> qr(warm);
  Matrix Q = qr.householderQ() * Matrix::Identity(p, dim);
  for (Index j = 0; j < dim; ++j)
    if (Q.col(j).dot(warm.col(j)) < 0) Q.col(j) = -Q.col(j);
  out.V0 = Q;

  const ObjectiveFn fn = [&](const Matrix& V, Matrix* grad) {
    return evaluate_cluster_objective(X, V, gmm, lambda, grad);
  };
  AscentOptions options;
  options.grad_scale = static_cast<double>(n);
  out.ascent = ascend(fn, out.V0, opt, options);
  out.V = out.ascent.V;

  const GradientWorkspace ws = make_workspace(Matrix(0, p), out.V, gmm);
  GmmModel start;
  start.weights = gmm.weights;
  for (int k = 0; k < gmm.size(); ++k) {
    start.means.push_back(ws.proj_means.row(k).transpose());
    start.covariances.push_back(ws.proj_vars.row(k).transpose().asDiagonal());
  }
  const Matrix Z = X * out.V;
  GmmFit refit = fit_diag_gmm_em(Z, start, config);
  out.projected_gmm = std::move(refit.model);
  out.em_trace = std::move(refit.loglik_trace);
  out.labels = gmm_assign(Z, out.projected_gmm);
  return out;
}

PcaReduction pca_prefilter(const Matrix& X, double threshold) {
  if (!(threshold > 0 && threshold <= 1)) throw ConfigError("pca threshold must be in (0, 1]");
  const Index p = X.cols();
  PcaReduction out;
  const Matrix cov = covariance_mle(X);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  out.explained = es.eigenvalues().reverse().cwiseMax(0.0);
  if (threshold >= 1.0) {
    out.X = X;
    out.basis = Matrix::Identity(p, p);
    out.mean = Vector::Zero(p);
    return out;
  }
  const double total = out.explained.sum();
  Index keep = p;
  double cumulative = 0;
  for (Index m = 0; m < p; ++m) {
    cumulative += out.explained[m];
    if (cumulative >= threshold * total) {
      keep = m + 1;
      break;
    }
  }
  out.mean = X.colwise().mean().transpose();
  out.basis = es.eigenvectors().rowwise().reverse().leftCols(keep);
  out.X = (X.rowwise() - out.mean.transpose()) * out.basis;
  return out;
}

}  // namespace opgd
