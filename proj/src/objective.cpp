#include "opgd/objective.hpp"

#include "opgd/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace opgd {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double variance_floor(const Matrix& cov, double column_sq_norm) {
  const double f = 1e-12 * cov.trace() / static_cast<double>(cov.rows()) * column_sq_norm;
  return std::max(f, std::numeric_limits<double>::min());
}

// Floors projected variances in place; returns the number of clamped entries.
int floor_projected_vars(const Matrix& V, const GaussianComponents& comps, Matrix& vars) {
  int clamped = 0;
  const Vector sq_norms = V.colwise().squaredNorm().transpose();
  for (int k = 0; k < comps.size(); ++k) {
    for (Index j = 0; j < V.cols(); ++j) {
      const double floor = variance_floor(comps.covariances[k], sq_norms[j]);
      if (!(vars(k, j) >= floor)) {
        vars(k, j) = floor;
        ++clamped;
      }
    }
  }
  return clamped;
}

void check_conformance(const Matrix& X, const Matrix& V, const GaussianComponents& comps) {
  if (V.rows() != X.cols() || comps.dim() != X.cols())
    throw ConfigError("projection, model and data dimensions do not conform");
  if (V.cols() < 1) throw ConfigError("projection must have at least one column");
}

}  // namespace

GradientWorkspace make_workspace(const Matrix& X, const Matrix& V, const GaussianComponents& comps) {
  check_conformance(X, V, comps);
  const int K = comps.size();
  const Index n = X.rows();
  const Index q = V.cols();

  GradientWorkspace ws;
  ws.projected = X * V;
  ws.proj_means.resize(K, q);
  ws.proj_vars.resize(K, q);
  for (int k = 0; k < K; ++k) {
    ws.proj_means.row(k) = (V.transpose() * comps.means[k]).transpose();
    ws.proj_vars.row(k) = diag_congruence(V, comps.covariances[k]).transpose();
  }
  ws.clamp_events = floor_projected_vars(V, comps, ws.proj_vars);

  ws.log_dens.resize(n, K);
  for (int k = 0; k < K; ++k) {
    const Eigen::RowVectorXd inv_var = ws.proj_vars.row(k).cwiseInverse();
    const double log_det = ws.proj_vars.row(k).array().log().sum();
    const double c = -0.5 * (static_cast<double>(q) * kLog2Pi + log_det);
    const Matrix centered = ws.projected.rowwise() - ws.proj_means.row(k);
    ws.log_dens.col(k) =
        (c - 0.5 * (centered.array().square().rowwise() * inv_var.array()).rowwise().sum()).matrix();
  }

  const Eigen::RowVectorXd log_w = comps.weights.array().log().matrix().transpose();
  ws.log_norm.resize(n);
  ws.posteriors.resize(n, K);
  for (Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd joint = ws.log_dens.row(i) + log_w;
    ws.log_norm[i] = log_sum_exp(joint);
    ws.posteriors.row(i) = (joint.array() - ws.log_norm[i]).exp().matrix();
  }
  return ws;
}

double log_density_projected(const Vector& x, const Matrix& V, const Vector& mean, const Matrix& cov,
                             int* clamp_events) {
  const Index q = V.cols();
  double out = -0.5 * static_cast<double>(q) * kLog2Pi;
  const Vector d = x - mean;
  for (Index t = 0; t < q; ++t) {
    const auto v = V.col(t);
    double s = v.dot(cov * v);
    const double floor = variance_floor(cov, v.squaredNorm());
    if (!(s >= floor)) {
      s = floor;
      if (clamp_events) ++*clamp_events;
    }
    const double u = v.dot(d);
    out -= 0.5 * (std::log(s) + u * u / s);
  }
  return out;
}

Matrix grad_log_density_projected(const Vector& x, const Matrix& V, const Vector& mean, const Matrix& cov) {
  Matrix G(V.rows(), V.cols());
  const Vector d = x - mean;
  for (Index j = 0; j < V.cols(); ++j) {
    const Vector v = V.col(j);
    const Vector cov_v = cov * v;
    const double s = std::max(v.dot(cov_v), variance_floor(cov, v.squaredNorm()));
    const double u = d.dot(v);
    const double alpha = u * u / s;
    G.col(j) = ((alpha - 1.0) * cov_v - u * d) / s;
  }
  return G;
}

Matrix posteriors(const Dataset& data, const Matrix& V, const GaussianComponents& model) {
  return make_workspace(data.X, V, model).posteriors;
}

double log_prior_term(const Dataset& data, const GaussianClassModel& model) {
  double s = 0;
  for (int y : data.labels) s += std::log(model.priors()[y]);
  return s;
}

double classification_log_likelihood(const Dataset& data, const Matrix& V, const GaussianClassModel& model) {
  return evaluate_objective(data, V, model, false).value;
}

double ell1(const Dataset& data, const Matrix& V, const GaussianClassModel& model) {
  const GradientWorkspace ws = make_workspace(data.X, V, model);
  const double n = static_cast<double>(data.n());
  const double q = static_cast<double>(V.cols());
  double out = -n * q * (kLog2Pi + 1.0) / 2.0;
  for (int k = 0; k < model.size(); ++k)
    out -= 0.5 * static_cast<double>(model.counts[k]) * ws.proj_vars.row(k).array().log().sum();
  return out;
}

double ell1_direct(const Dataset& data, const Matrix& V, const GaussianClassModel& model) {
  const GradientWorkspace ws = make_workspace(data.X, V, model);
  double out = 0;
  for (Index i = 0; i < data.n(); ++i) out += ws.log_dens(i, data.labels[i]);
  return out;
}

double ell2(const Dataset& data, const Matrix& V, const GaussianComponents& model) {
  return make_workspace(data.X, V, model).log_norm.sum();
}

namespace {

Matrix grad_ell1_from(const Matrix& V, const GaussianClassModel& model, const Matrix& proj_vars) {
  Matrix G = Matrix::Zero(V.rows(), V.cols());
  for (int k = 0; k < model.size(); ++k) {
    const Matrix cov_v = model.covariances[k] * V;
    const double nk = static_cast<double>(model.counts[k]);
    for (Index j = 0; j < V.cols(); ++j) G.col(j) -= (nk / proj_vars(k, j)) * cov_v.col(j);
  }
  return G;
}

}  // namespace

Matrix grad_ell1(const Dataset& data, const Matrix& V, const GaussianClassModel& model) {
  const GradientWorkspace ws = make_workspace(data.X, V, model);
  return grad_ell1_from(V, model, ws.proj_vars);
}

std::vector<Matrix> weighted_scatter(const Matrix& X, const GaussianComponents& comps, const Matrix& weights) {
  std::vector<Matrix> S;
  S.reserve(comps.size());
  for (int k = 0; k < comps.size(); ++k) {
    const Matrix centered = X.rowwise() - comps.means[k].transpose();
    Matrix Sk = centered.transpose() * (weights.col(k).asDiagonal() * centered);
    S.push_back(symmetrize(Sk));
  }
  return S;
}

Matrix weighted_log_density_gradient(const Matrix& X, const Matrix& V, const GaussianComponents& comps,
                                     const Matrix& weights, const Matrix& proj_vars) {
  Matrix G = Matrix::Zero(V.rows(), V.cols());
  const std::vector<Matrix> S = weighted_scatter(X, comps, weights);
  for (int k = 0; k < comps.size(); ++k) {
    if (weights.col(k).isZero(0.0)) continue;
    const double mass = weights.col(k).sum();
    const Matrix cov_v = comps.covariances[k] * V;
    const Matrix s_v = S[k] * V;
    for (Index j = 0; j < V.cols(); ++j) {
      const double s = proj_vars(k, j);
      const double q = V.col(j).dot(s_v.col(j));
      G.col(j) += ((q / s - mass) * cov_v.col(j) - s_v.col(j)) / s;
    }
  }
  return G;
}

Matrix grad_ell2(const Dataset& data, const Matrix& V, const GaussianComponents& model) {
  const GradientWorkspace ws = make_workspace(data.X, V, model);
  return weighted_log_density_gradient(data.X, V, model, ws.posteriors, ws.proj_vars);
}

Matrix grad_objective(const Dataset& data, const Matrix& V, const GaussianClassModel& model) {
  return evaluate_objective(data, V, model, true).gradient;
}

ObjectiveValue evaluate_objective(const Dataset& data, const Matrix& V, const GaussianClassModel& model,
                                  bool with_gradient) {
  if (!data.labeled()) throw ConfigError("the classification objective requires labels");
  const GradientWorkspace ws = make_workspace(data.X, V, model);
  ObjectiveValue out;
  out.clamp_events = ws.clamp_events;
  out.prior_term = log_prior_term(data, model);
  double l1 = 0;
  for (Index i = 0; i < data.n(); ++i) l1 += ws.log_dens(i, data.labels[i]);
  out.ell1 = l1;
  out.ell2 = ws.log_norm.sum();
  // Summed per observation so that each term is a log posterior and the total stays <= 0.
  double value = 0;
  for (Index i = 0; i < data.n(); ++i) {
    const int y = data.labels[i];
    value += std::min(0.0, std::log(model.priors()[y]) + ws.log_dens(i, y) - ws.log_norm[i]);
  }
  out.value = value;
  if (with_gradient)
    out.gradient = grad_ell1_from(V, model, ws.proj_vars) -
                   weighted_log_density_gradient(data.X, V, model, ws.posteriors, ws.proj_vars);
  return out;
}

}  // namespace opgd
