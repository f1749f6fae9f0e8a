#pragma once

#include "opgd/classifier.hpp"
#include "opgd/core.hpp"
#include "opgd/optimizer.hpp"

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace opgd {

/// Fraction of mismatched entries. Throws ConfigError on length mismatch or empty input.
double misclassification_error(const std::vector<int>& pred, const std::vector<int>& truth);

/// Hubert-Arabie adjusted Rand index from the contingency table. Two trivial
/// partitions (both all-in-one or both all-singletons) score 1.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct NmiResult {
  double value = 0;
  bool degenerate = false;  // one side has zero entropy
};

/// Mutual information normalized by sqrt(H(a) H(b)).
NmiResult normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b);

struct SplitPlan {
  std::vector<Index> train, validation, test;
  std::array<double, 3> ratios{0.5, 0.25, 0.25};
  std::uint64_t seed = 0;
};

/// Random train/validation/test partition; sizes are round(n * ratio) for the
/// first two parts and the remainder for the test part.
SplitPlan make_split(Index n, std::array<double, 3> ratios, std::uint64_t seed);

struct FoldPlan {
  std::vector<int> fold;  // fold index per observation
  int num_folds = 0;

  std::vector<Index> members(int f) const;
  std::vector<Index> complement(int f) const;
};

/// k folds over n observations. With a grouping key every group lands in a single
/// fold; k may not exceed the number of groups.
FoldPlan make_folds(Index n, int k, const std::vector<int>& grouping, std::uint64_t seed);

/// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<Index> shuffled_indices(Index n, std::uint64_t seed);

enum class Method { Opgd, Lda, Rda, Save };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

using FittedModel = std::variant<OpgdModel, LdaModel, RdaModel, SaveModel>;

/// Fits one method at one hyper-parameter (p', r, alpha or r). `warm_start` is
/// only used by OPGD.
FittedModel fit_method(Method method, const Dataset& train, double hyper, const OptimConfig& opt,
                       const std::optional<Matrix>& warm_start = std::nullopt);

std::vector<int> predict_labels(const FittedModel& model, const Matrix& X);

/// Default hyper-parameter grid: OPGD p' in 1..p, LDA r in 1..K-1, RDA alpha grid,
/// SAVE r in 1..p.
std::vector<double> default_grid(Method method, const Dataset& train);

struct HoldOut {
  std::vector<Index> fit_rows;
  std::vector<Index> validation_rows;
};

using Validation = std::variant<HoldOut, FoldPlan>;

struct GridPoint {
  double value = 0;
  double error = 1;
  bool failed = false;
  std::string message;
};

struct GridSearchResult {
  double best = 0;
  double best_error = 1;
  std::vector<GridPoint> points;
  FittedModel model;  // refit on all of `train` at `best`
};

/// Picks the grid value with the smallest validation (or cross-validation) error;
/// ties go to the smaller value. Failed grid points are recorded; if all fail a
/// NumericalError carrying the last message is thrown. OPGD refits start from the best hold-out solution.
GridSearchResult grid_search(Method method, const std::vector<double>& grid, const Dataset& train,
                             const Validation& validation, const OptimConfig& opt);

struct ResultRow {
  std::string protocol;  // "cv" or "split"
  int repeat = 0;
  Method method = Method::Opgd;
  double hyper = 0;
  double selection_error = 0;
  double test_error = 0;
};

/// Cross-validated selection on `train` followed by evaluation on `test`.
std::vector<ResultRow> evaluate_cv(const Dataset& train, const Dataset& test, const FoldPlan& folds,
                                   const std::vector<Method>& methods, const OptimConfig& opt,
                                   const std::optional<std::vector<double>>& grid = std::nullopt);

/// Repeated random train/validation/test splits of one dataset.
std::vector<ResultRow> evaluate_splits(const Dataset& data, const std::vector<Method>& methods, int repeats,
                                       std::array<double, 3> ratios, std::uint64_t seed, const OptimConfig& opt,
                                       const std::optional<std::vector<double>>& grid = std::nullopt);

}  // namespace opgd
