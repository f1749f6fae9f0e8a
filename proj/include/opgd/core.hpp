#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace opgd {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Observations stored row-wise with optional class labels.
///
/// Labels are held as contiguous 0-based class indices; `class_names` keeps the
/// original label strings so that output files can report them unchanged.
struct Dataset {
  Matrix X;
  std::vector<int> labels;  // empty when unlabeled
  int num_classes = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<int> groups;  // optional grouping key (e.g. speaker), empty when absent

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
  bool labeled() const { return !labels.empty(); }
};

/// Builds and validates a dataset. Feature and class names default to
/// x1..xp and 1..K.
Dataset make_dataset(Matrix X, std::vector<int> labels = {}, int num_classes = 0);

/// Throws DataError when the dataset breaks its invariants.
void validate(const Dataset& data);

/// Row subset, preserving labels, names and groups. Class ids are not remapped.
Dataset subset(const Dataset& data, std::span<const Index> rows);

/// Weights, means and full covariances of K Gaussian components in the input space.
struct GaussianComponents {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;

  int size() const { return static_cast<int>(means.size()); }
  Index dim() const { return means.empty() ? 0 : means.front().size(); }
};

/// Per-class maximum likelihood Gaussian fit; the weights are the class priors n_k/n.
struct GaussianClassModel : GaussianComponents {
  std::vector<Index> counts;

  const Vector& priors() const { return weights; }
};

struct ScatterMatrices {
  Matrix within;   // pooled within-class covariance, 1/n convention
  Matrix between;  // (1/n) sum_k n_k (mu_k - mu)(mu_k - mu)^T
  Matrix total;    // covariance of all data, 1/n convention
  Vector grand_mean;
  int num_classes = 0;
};

GaussianClassModel estimate_class_model(const Dataset& data);

ScatterMatrices compute_scatter(const Dataset& data, const GaussianClassModel& model);

/// Scatter matrices for hard assignments that may leave some classes empty;
/// empty classes contribute nothing and are not counted in num_classes.
ScatterMatrices scatter_from_assignments(const Matrix& X, std::span<const int> assignment,
                                         int num_classes);

/// Diagonal of V^T S V, i.e. v_j^T S v_j for every column.
Vector diag_congruence(const Matrix& V, const Matrix& S);

/// Covariance with the 1/n divisor.
Matrix covariance_mle(const Matrix& X);

/// (S + S^T) / 2
Matrix symmetrize(const Matrix& S);

/// Eigenvalues at or below this are treated as zero: 1e-10 * trace(S) / p.
double eigen_floor(const Matrix& S);

struct Sphering {
  Dataset data;      // (X - mean) * transform, total covariance I
  Matrix transform;  // symmetric inverse square root of the total covariance
  Vector mean;
};

/// Whitens the data. Throws CollinearityError when the total covariance is singular.
Sphering sphere(const Dataset& data);

/// Index of the largest entry; ties go to the lowest index.
Index argmax(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// log(sum(exp(row))) with the usual max shift.
double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Leading r solutions of A v = lambda B v for symmetric A and positive definite B,
/// each rescaled to unit Euclidean norm. `values`, when given, receives the
/// matching eigenvalues in decreasing order.
Matrix leading_generalized_eigenvectors(const Matrix& A, const Matrix& B, Index r, Vector* values = nullptr);

/// Leading r eigenvectors of a symmetric matrix, decreasing eigenvalue order.
Matrix leading_eigenvectors(const Matrix& S, Index r, Vector* values = nullptr);

/// Rescales every column to unit Euclidean norm.
Matrix normalize_columns(const Matrix& V);

}  // namespace opgd
