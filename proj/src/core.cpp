#include "opgd/core.hpp"

#include "opgd/errors.hpp"

#include <cmath>
#include <limits>

namespace opgd {

Dataset make_dataset(Matrix X, std::vector<int> labels, int num_classes) {
  Dataset data;
  data.X = std::move(X);
  data.labels = std::move(labels);
  if (!data.labels.empty() && num_classes == 0) {
    for (int y : data.labels) num_classes = std::max(num_classes, y + 1);
  }
  data.num_classes = data.labels.empty() ? 0 : num_classes;
  for (Index j = 0; j < data.X.cols(); ++j) data.feature_names.push_back("x" + std::to_string(j + 1));
  for (int k = 0; k < data.num_classes; ++k) data.class_names.push_back(std::to_string(k + 1));
  validate(data);
  return data;
}

void validate(const Dataset& data) {
  if (data.n() < 1 || data.p() < 1) throw DataError("dataset must have at least one row and one column");
  if (!data.X.allFinite()) throw DataError("dataset contains non-finite entries");
  if (!data.feature_names.empty() && static_cast<Index>(data.feature_names.size()) != data.p())
    throw DataError("feature name count does not match column count");
  if (!data.groups.empty() && static_cast<Index>(data.groups.size()) != data.n())
    throw DataError("group column length does not match row count");
  if (!data.labeled()) return;
  if (static_cast<Index>(data.labels.size()) != data.n())
    throw DataError("label count does not match row count");
  if (data.num_classes < 1) throw DataError("labeled dataset needs at least one class");
  std::vector<Index> seen(data.num_classes, 0);
  for (int y : data.labels) {
    if (y < 0 || y >= data.num_classes) throw DataError("label out of range: " + std::to_string(y));
    ++seen[y];
  }
  for (int k = 0; k < data.num_classes; ++k)
    if (seen[k] == 0) throw DataError("class " + std::to_string(k) + " has no observations");
}

Dataset subset(const Dataset& data, std::span<const Index> rows) {
  Dataset out;
  out.X.resize(static_cast<Index>(rows.size()), data.p());
  for (std::size_t i = 0; i < rows.size(); ++i) out.X.row(static_cast<Index>(i)) = data.X.row(rows[i]);
  if (data.labeled()) {
    out.labels.reserve(rows.size());
    for (Index r : rows) out.labels.push_back(data.labels[r]);
  }
  if (!data.groups.empty()) {
    out.groups.reserve(rows.size());
    for (Index r : rows) out.groups.push_back(data.groups[r]);
  }
  out.num_classes = data.num_classes;
  out.feature_names = data.feature_names;
  out.class_names = data.class_names;
  return out;
}

GaussianClassModel estimate_class_model(const Dataset& data) {
  if (!data.labeled()) throw ConfigError("class model estimation requires labels");
  const int K = data.num_classes;
  const Index n = data.n();
  const Index p = data.p();

  GaussianClassModel model;
  model.counts.assign(K, 0);
  for (int y : data.labels) ++model.counts[y];
  for (int k = 0; k < K; ++k)
    if (model.counts[k] < 2) throw DegenerateClassError(k, static_cast<long>(model.counts[k]));

  model.weights.resize(K);
  model.means.assign(K, Vector::Zero(p));
  for (Index i = 0; i < n; ++i) model.means[data.labels[i]] += data.X.row(i).transpose();
  for (int k = 0; k < K; ++k) {
    model.means[k] /= static_cast<double>(model.counts[k]);
    model.weights[k] = static_cast<double>(model.counts[k]) / static_cast<double>(n);
  }

  model.covariances.assign(K, Matrix::Zero(p, p));
  for (Index i = 0; i < n; ++i) {
    const int k = data.labels[i];
    const Vector d = data.X.row(i).transpose() - model.means[k];
    model.covariances[k].selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  for (int k = 0; k < K; ++k) {
    Matrix& S = model.covariances[k];
    S = S.selfadjointView<Eigen::Lower>();
    S /= static_cast<double>(model.counts[k]);
    S = symmetrize(S);
  }
  return model;
}

ScatterMatrices compute_scatter(const Dataset& data, const GaussianClassModel& model) {
  const Index n = data.n();
  const Index p = data.p();
  ScatterMatrices sc;
  sc.num_classes = model.size();
  sc.grand_mean = data.X.colwise().mean().transpose();
  sc.within = Matrix::Zero(p, p);
  sc.between = Matrix::Zero(p, p);
  for (int k = 0; k < model.size(); ++k) {
    const double nk = static_cast<double>(model.counts[k]);
    sc.within += nk * model.covariances[k];
    const Vector d = model.means[k] - sc.grand_mean;
    sc.between += nk * d * d.transpose();
  }
  sc.within = symmetrize(sc.within / static_cast<double>(n));
  sc.between = symmetrize(sc.between / static_cast<double>(n));
  sc.total = symmetrize(sc.within + sc.between);
  return sc;
}

ScatterMatrices scatter_from_assignments(const Matrix& X, std::span<const int> assignment,
                                         int num_classes) {
  const Index n = X.rows();
  const Index p = X.cols();
  std::vector<Index> counts(num_classes, 0);
  std::vector<Vector> means(num_classes, Vector::Zero(p));
  for (Index i = 0; i < n; ++i) {
    ++counts[assignment[i]];
    means[assignment[i]] += X.row(i).transpose();
  }
  ScatterMatrices sc;
  sc.grand_mean = X.colwise().mean().transpose();
  sc.within = Matrix::Zero(p, p);
  sc.between = Matrix::Zero(p, p);
  for (int k = 0; k < num_classes; ++k) {
    if (counts[k] == 0) continue;
    ++sc.num_classes;
    means[k] /= static_cast<double>(counts[k]);
    const Vector d = means[k] - sc.grand_mean;
    sc.between += static_cast<double>(counts[k]) * d * d.transpose();
  }
  for (Index i = 0; i < n; ++i) {
    const Vector d = X.row(i).transpose() - means[assignment[i]];
    sc.within.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  sc.within = sc.within.selfadjointView<Eigen::Lower>();
  sc.within = symmetrize(sc.within / static_cast<double>(n));
  sc.between = symmetrize(sc.between / static_cast<double>(n));
  sc.total = symmetrize(sc.within + sc.between);
  return sc;
}

Vector diag_congruence(const Matrix& V, const Matrix& S) {
  return (V.array() * (S * V).array()).colwise().sum().transpose();
}

Matrix covariance_mle(const Matrix& X) {
  const Matrix centered = X.rowwise() - X.colwise().mean();
  return symmetrize(centered.transpose() * centered / static_cast<double>(X.rows()));
}

Matrix symmetrize(const Matrix& S) { return 0.5 * (S + S.transpose()); }

double eigen_floor(const Matrix& S) { return 1e-10 * S.trace() / static_cast<double>(S.rows()); }

Sphering sphere(const Dataset& data) {
  const Matrix cov = covariance_mle(data.X);
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the total covariance failed");
  const double floor = eigen_floor(cov);
  if (es.eigenvalues().minCoeff() <= floor)
    throw CollinearityError("total covariance is singular (smallest eigenvalue " +
                            std::to_string(es.eigenvalues().minCoeff()) + ")");
  Sphering out;
  out.mean = data.X.colwise().mean().transpose();
  out.transform = symmetrize(es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                             es.eigenvectors().transpose());
  out.data = data;
  out.data.X = (data.X.rowwise() - out.mean.transpose()) * out.transform;
  return out;
}

Index argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Index best = 0;
  for (Index k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const double m = row.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((row.array() - m).exp().sum());
}

Matrix leading_generalized_eigenvectors(const Matrix& A, const Matrix& B, Index r, Vector* values) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(symmetrize(A), symmetrize(B));
  if (es.info() != Eigen::Success) throw NumericalError("generalized eigendecomposition failed");
  // Eigen returns ascending order.
  Matrix out = es.eigenvectors().rightCols(r).rowwise().reverse();
  if (values) *values = es.eigenvalues().tail(r).reverse();
  return normalize_columns(out);
}

Matrix leading_eigenvectors(const Matrix& S, Index r, Vector* values) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  if (values) *values = es.eigenvalues().tail(r).reverse();
  return es.eigenvectors().rightCols(r).rowwise().reverse();
}

Matrix normalize_columns(const Matrix& V) {
  Matrix out = V;
  for (Index j = 0; j < V.cols(); ++j) {
    const double norm = V.col(j).norm();
    if (norm > 0) out.col(j) /= norm;
  }
  return out;
}

}  // namespace opgd
