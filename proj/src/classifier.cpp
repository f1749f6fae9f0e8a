#include "opgd/classifier.hpp"

#include "opgd/errors.hpp"
#include "opgd/objective.hpp"

#include <cmath>
#include <numbers>

namespace opgd {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Prediction from_log_joint(const Matrix& log_joint) {
  Prediction out;
  out.labels = argmax_rows(log_joint);
  out.posterior.resize(log_joint.rows(), log_joint.cols());
  for (Index i = 0; i < log_joint.rows(); ++i) {
    const double norm = log_sum_exp(log_joint.row(i));
    out.posterior.row(i) = (log_joint.row(i).array() - norm).exp().matrix();
  }
  return out;
}

}  // namespace

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(scores.rows());
  for (Index i = 0; i < scores.rows(); ++i) out[i] = static_cast<int>(argmax(scores.row(i)));
  return out;
}

double misclassification_count(const std::vector<int>& pred, const std::vector<int>& truth) {
  double wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != truth[i] ? 1.0 : 0.0;
  return wrong;
}

OpgdModel project_model(const GaussianClassModel& model, const Matrix& V) {
  const GradientWorkspace ws = make_workspace(Matrix(0, V.rows()), V, model);
  OpgdModel out;
  out.projection = V;
  out.projected_means = ws.proj_means;
  out.projected_vars = ws.proj_vars;
  out.priors = model.priors();
  out.diagnostics.clamp_events = ws.clamp_events;
  return out;
}

OpgdModel fit_opgd(const Dataset& train, Index dim, const OptimConfig& config, const std::optional<Matrix>& V0) {
  validate(config);
  if (dim < 1 || dim > train.p()) throw ConfigError("projected dimension must be in [1, p]");
  const GaussianClassModel model = estimate_class_model(train);

  Matrix start;
  bool fallback = false;
  if (V0) {
    if (V0->rows() != train.p() || V0->cols() != dim) throw ConfigError("warm start has the wrong shape");
    start = *V0;
  } else {
    const InitResult init = init_projection(compute_scatter(train, model), dim, config);
    start = init.V;
    fallback = init.fallback;
  }

  const AscentResult result = maximize(train, model, start, config);
  const Matrix V = order_columns(train, normalize_columns(result.V), model);

  OpgdModel out = project_model(model, V);
  out.class_names = train.class_names;
  out.feature_names = train.feature_names;
  out.trace = result.trace;
  OpgdDiagnostics& d = out.diagnostics;
  d.iterations = result.iterations;
  d.stop_reason = to_string(result.stop);
  d.initial_objective = result.trace.front();
  d.final_objective = classification_log_likelihood(train, V, model);
  d.init_fallback = fallback;
  d.clamp_events += evaluate_objective(train, V, model, false).clamp_events;
  d.training_error = misclassification_count(predict(out, train.X).labels, train.labels) /
                     static_cast<double>(train.n());
  return out;
}

Prediction predict(const OpgdModel& model, const Matrix& X) {
  if (X.cols() != model.projection.rows()) throw ConfigError("data dimension does not match the model");
  const Matrix Z = X * model.projection;
  const Index K = model.projected_means.rows();
  const double q = static_cast<double>(model.projection.cols());
  Matrix log_joint(X.rows(), K);
  for (Index k = 0; k < K; ++k) {
    const Eigen::RowVectorXd var = model.projected_vars.row(k);
    const double c = std::log(model.priors[k]) - 0.5 * (q * kLog2Pi + var.array().log().sum());
    const Matrix centered = Z.rowwise() - model.projected_means.row(k);
    log_joint.col(k) =
        (c - 0.5 * (centered.array().square().rowwise() / var.array()).rowwise().sum()).matrix();
  }
  return from_log_joint(log_joint);
}

Features lda_features(const ScatterMatrices& scatter, Index r, double ridge_frac) {
  if (r < 1 || r > scatter.num_classes - 1)
    throw ConfigError("LDA rank must be in [1, K-1]; got " + std::to_string(r));
  const Index p = scatter.within.rows();
  const double tr = scatter.within.trace();
  const Matrix W = scatter.within + ridge_frac * (tr > 0 ? tr / static_cast<double>(p) : 1.0) * Matrix::Identity(p, p);
  Features f;
  f.V = leading_generalized_eigenvectors(scatter.between, W, r, &f.eigenvalues);
  f.informative = f.eigenvalues[0] > 1e-10;
  return f;
}

Features save_features(const Dataset& data, Index r) {
  if (r < 1 || r > data.p()) throw ConfigError("SAVE rank must be in [1, p]");
  const Sphering sph = sphere(data);
  const GaussianClassModel sphered = estimate_class_model(sph.data);
  const Index p = data.p();
  Matrix M = Matrix::Zero(p, p);
  for (int k = 0; k < sphered.size(); ++k) {
    const Matrix D = Matrix::Identity(p, p) - sphered.covariances[k];
    M += sphered.priors()[k] * D * D;
  }
  Features f;
  const Matrix E = leading_eigenvectors(symmetrize(M), r, &f.eigenvalues);
  f.V = normalize_columns(sph.transform * E);
  f.informative = f.eigenvalues[0] > 1e-10;
  return f;
}

Matrix GaussianRule::log_joint(const Matrix& X) const {
  const Index K = static_cast<Index>(means.size());
  const double d = static_cast<double>(X.cols());
  Matrix out(X.rows(), K);
  for (Index k = 0; k < K; ++k) {
    const Matrix centered = (X.rowwise() - means[k].transpose()).transpose();
    const Matrix solved = chol_lower[k].triangularView<Eigen::Lower>().solve(centered);
    out.col(k) = (log_priors[k] - 0.5 * (d * kLog2Pi + log_dets[k]) -
                  0.5 * solved.colwise().squaredNorm().array())
                     .matrix()
                     .transpose();
  }
  return out;
}

GaussianRule make_gaussian_rule(const Vector& priors, const std::vector<Vector>& means,
                                const std::vector<Matrix>& covariances) {
  GaussianRule rule;
  rule.log_priors = priors.array().log().matrix();
  rule.means = means;
  rule.log_dets.resize(static_cast<Index>(means.size()));
  for (std::size_t k = 0; k < covariances.size(); ++k) {
    Matrix S = symmetrize(covariances[k]);
    const Index p = S.rows();
    const double tr = S.trace();
    double ridge = 1e-8 * (tr > 0 ? tr / static_cast<double>(p) : 1.0);
    Eigen::LLT<Matrix> llt(S);
    for (int attempt = 0; llt.info() != Eigen::Success && attempt < 12; ++attempt) {
      rule.ridged = true;
      llt.compute(S + ridge * Matrix::Identity(p, p));
      ridge *= 10;
    }
    if (llt.info() != Eigen::Success) throw NumericalError("class covariance is not positive definite");
    Matrix L = llt.matrixL();
    rule.log_dets[static_cast<Index>(k)] = 2.0 * L.diagonal().array().log().sum();
    rule.chol_lower.push_back(std::move(L));
  }
  return rule;
}

Prediction predict(const GaussianRule& rule, const Matrix& X) { return from_log_joint(rule.log_joint(X)); }

LdaModel lda_fit(const Dataset& train, Index r, double ridge_frac) {
  const GaussianClassModel model = estimate_class_model(train);
  const ScatterMatrices scatter = compute_scatter(train, model);
  const Features f = lda_features(scatter, r, ridge_frac);
  const Index p = train.p();
  const double tr = scatter.within.trace();
  const Matrix W = scatter.within + ridge_frac * (tr > 0 ? tr / static_cast<double>(p) : 1.0) * Matrix::Identity(p, p);

  LdaModel out;
  out.rank = r;
  out.informative = f.informative;
  out.scaling = f.V;
  for (Index j = 0; j < r; ++j) out.scaling.col(j) /= std::sqrt(f.V.col(j).dot(W * f.V.col(j)));
  out.centroids.resize(model.size(), r);
  for (int k = 0; k < model.size(); ++k) out.centroids.row(k) = (out.scaling.transpose() * model.means[k]).transpose();
  out.log_priors = model.priors().array().log().matrix();
  return out;
}

Prediction lda_predict(const LdaModel& model, const Matrix& X) {
  const Matrix Z = X * model.scaling;
  Matrix log_joint(X.rows(), model.centroids.rows());
  for (Index k = 0; k < model.centroids.rows(); ++k)
    log_joint.col(k) = (model.log_priors[k] - 0.5 * (Z.rowwise() - model.centroids.row(k)).rowwise().squaredNorm().array()).matrix();
  return from_log_joint(log_joint);
}

RdaModel rda_fit(const Dataset& train, double alpha) {
  if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("RDA alpha must be in [0, 1]");
  const GaussianClassModel model = estimate_class_model(train);
  const ScatterMatrices scatter = compute_scatter(train, model);
  std::vector<Matrix> blended;
  for (const Matrix& S : model.covariances) blended.push_back(alpha * S + (1.0 - alpha) * scatter.within);
  RdaModel out;
  out.alpha = alpha;
  out.rule = make_gaussian_rule(model.priors(), model.means, blended);
  return out;
}

Prediction rda_predict(const RdaModel& model, const Matrix& X) { return predict(model.rule, X); }

std::vector<double> rda_grid(Index p) {
  if (p <= 1) return {0.0, 1.0};
  std::vector<double> grid;
  for (Index i = 0; i < p; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(p - 1));
  return grid;
}

SaveModel save_fit(const Dataset& train, Index r) {
  SaveModel out;
  out.features = save_features(train, r);
  Dataset projected = train;
  projected.X = train.X * out.features.V;
  projected.feature_names.clear();
  const GaussianClassModel model = estimate_class_model(projected);
  out.rule = make_gaussian_rule(model.priors(), model.means, model.covariances);
  return out;
}

Prediction save_predict(const SaveModel& model, const Matrix& X) { return predict(model.rule, X * model.features.V); }

}  // namespace opgd
