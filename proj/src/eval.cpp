#include "opgd/eval.hpp"

#include "opgd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace opgd {
namespace {

// Contingency table between two labelings with arbitrary integer ids.
struct Contingency {
  std::vector<std::vector<double>> cells;
  std::vector<double> rows, cols;
  double n = 0;
};

Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ConfigError("partitions have different lengths");
  if (a.empty()) throw ConfigError("partitions are empty");
  std::map<int, std::size_t> ia, ib;
  for (int v : a) ia.emplace(v, 0);
  for (int v : b) ib.emplace(v, 0);
  std::size_t next = 0;
  for (auto& [k, v] : ia) v = next++;
  next = 0;
  for (auto& [k, v] : ib) v = next++;
  Contingency t;
  t.cells.assign(ia.size(), std::vector<double>(ib.size(), 0.0));
  t.rows.assign(ia.size(), 0.0);
  t.cols.assign(ib.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t r = ia[a[i]];
    const std::size_t c = ib[b[i]];
    t.cells[r][c] += 1;
    t.rows[r] += 1;
    t.cols[c] += 1;
  }
  t.n = static_cast<double>(a.size());
  return t;
}

double pairs(double m) { return m * (m - 1) / 2; }

}  // namespace

double misclassification_error(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw ConfigError("prediction and truth have different lengths");
  if (pred.empty()) throw ConfigError("no predictions to score");
  return misclassification_count(pred, truth) / static_cast<double>(pred.size());
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const Contingency t = contingency(a, b);
  double index = 0;
  for (const auto& row : t.cells)
    for (double c : row) index += pairs(c);
  double sum_a = 0, sum_b = 0;
  for (double r : t.rows) sum_a += pairs(r);
  for (double c : t.cols) sum_b += pairs(c);
  const double total = pairs(t.n);
  const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

NmiResult normalized_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  const Contingency t = contingency(a, b);
  auto entropy = [&](const std::vector<double>& counts) {
    double h = 0;
    for (double c : counts)
      if (c > 0) h -= (c / t.n) * std::log(c / t.n);
    return h;
  };
  const double ha = entropy(t.rows);
  const double hb = entropy(t.cols);
  if (ha <= 0 || hb <= 0) return {0.0, true};
  double mi = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.cols.size(); ++c) {
      const double nij = t.cells[r][c];
      if (nij > 0) mi += (nij / t.n) * std::log(t.n * nij / (t.rows[r] * t.cols[c]));
    }
  return {std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0), false};
}

std::vector<Index> shuffled_indices(Index n, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

SplitPlan make_split(Index n, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (!(r > 0)) throw ConfigError("split ratios must be positive");
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  const Index n_train = static_cast<Index>(std::llround(static_cast<double>(n) * ratios[0]));
  const Index n_val = static_cast<Index>(std::llround(static_cast<double>(n) * ratios[1]));
  if (n_train < 1 || n_val < 1 || n - n_train - n_val < 1) throw ConfigError("split leaves an empty part");

  const std::vector<Index> perm = shuffled_indices(n, seed);
  SplitPlan plan;
  plan.ratios = ratios;
  plan.seed = seed;
  plan.train.assign(perm.begin(), perm.begin() + n_train);
  plan.validation.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  plan.test.assign(perm.begin() + n_train + n_val, perm.end());
  for (auto* part : {&plan.train, &plan.validation, &plan.test}) std::sort(part->begin(), part->end());
  return plan;
}

std::vector<Index> FoldPlan::members(int f) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] == f) out.push_back(static_cast<Index>(i));
  return out;
}

std::vector<Index> FoldPlan::complement(int f) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] != f) out.push_back(static_cast<Index>(i));
  return out;
}

FoldPlan make_folds(Index n, int k, const std::vector<int>& grouping, std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  FoldPlan plan;
  plan.num_folds = k;
  plan.fold.assign(static_cast<std::size_t>(n), 0);
  if (grouping.empty()) {
    if (k > n) throw ConfigError("more folds than observations");
    const std::vector<Index> perm = shuffled_indices(n, seed);
    for (Index i = 0; i < n; ++i) plan.fold[perm[i]] = static_cast<int>(i % k);
    return plan;
  }
  if (static_cast<Index>(grouping.size()) != n) throw ConfigError("grouping length does not match n");
  const std::set<int> unique(grouping.begin(), grouping.end());
  if (k > static_cast<int>(unique.size()))
    throw ConfigError("requested " + std::to_string(k) + " folds but only " + std::to_string(unique.size()) +
                      " groups exist");
  const std::vector<int> groups(unique.begin(), unique.end());
  const std::vector<Index> perm = shuffled_indices(static_cast<Index>(groups.size()), seed);
  std::map<int, int> fold_of;
  for (std::size_t pos = 0; pos < perm.size(); ++pos) fold_of[groups[perm[pos]]] = static_cast<int>(pos % k);
  for (Index i = 0; i < n; ++i) plan.fold[i] = fold_of[grouping[i]];
  return plan;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Opgd: return "opgd";
    case Method::Lda: return "lda";
    case Method::Rda: return "rda";
    case Method::Save: return "save";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "opgd") return Method::Opgd;
  if (s == "lda") return Method::Lda;
  if (s == "rda") return Method::Rda;
  if (s == "save") return Method::Save;
  throw ConfigError("unknown method '" + s + "' (expected opgd, lda, rda or save)");
}

FittedModel fit_method(Method method, const Dataset& train, double hyper, const OptimConfig& opt,
                       const std::optional<Matrix>& warm_start) {
  const Index dim = static_cast<Index>(std::llround(hyper));
  switch (method) {
    case Method::Opgd: return fit_opgd(train, dim, opt, warm_start);
    case Method::Lda: return lda_fit(train, dim, opt.ridge_frac);
    case Method::Rda: return rda_fit(train, hyper);
    case Method::Save: return save_fit(train, dim);
  }
  throw ConfigError("unknown method");
}

std::vector<int> predict_labels(const FittedModel& model, const Matrix& X) {
  return std::visit(
      [&](const auto& m) -> std::vector<int> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, OpgdModel>) return predict(m, X).labels;
        else if constexpr (std::is_same_v<T, LdaModel>) return lda_predict(m, X).labels;
        else if constexpr (std::is_same_v<T, RdaModel>) return rda_predict(m, X).labels;
        else return save_predict(m, X).labels;
      },
      model);
}

std::vector<double> default_grid(Method method, const Dataset& train) {
  std::vector<double> grid;
  switch (method) {
    case Method::Opgd:
    case Method::Save:
      for (Index d = 1; d <= train.p(); ++d) grid.push_back(static_cast<double>(d));
      break;
    case Method::Lda:
      for (int r = 1; r <= train.num_classes - 1; ++r) grid.push_back(static_cast<double>(r));
      break;
    case Method::Rda: grid = rda_grid(train.p()); break;
  }
  return grid;
}

GridSearchResult grid_search(Method method, const std::vector<double>& grid, const Dataset& train,
                             const Validation& validation, const OptimConfig& opt) {
  if (grid.empty()) throw ConfigError("hyper-parameter grid is empty");
  GridSearchResult result;
  std::vector<std::optional<Matrix>> holdout_projection(grid.size());
  std::string last_failure;

  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridPoint point;
    point.value = grid[g];
    try {
      if (const auto* holdout = std::get_if<HoldOut>(&validation)) {
        const Dataset fit_part = subset(train, holdout->fit_rows);
        const Dataset val_part = subset(train, holdout->validation_rows);
        const FittedModel model = fit_method(method, fit_part, grid[g], opt);
        point.error = misclassification_error(predict_labels(model, val_part.X), val_part.labels);
        if (const auto* m = std::get_if<OpgdModel>(&model)) holdout_projection[g] = m->projection;
      } else {
        const auto& folds = std::get<FoldPlan>(validation);
        double wrong = 0;
        for (int f = 0; f < folds.num_folds; ++f) {
          const std::vector<Index> fit_rows = folds.complement(f);
          const std::vector<Index> val_rows = folds.members(f);
          if (val_rows.empty()) continue;
          const Dataset val_part = subset(train, val_rows);
          const FittedModel model = fit_method(method, subset(train, fit_rows), grid[g], opt);
          wrong += misclassification_count(predict_labels(model, val_part.X), val_part.labels);
        }
        point.error = wrong / static_cast<double>(train.n());
      }
    } catch (const Error& e) {
      point.failed = true;
      point.message = e.what();
      last_failure = e.what();
    }
    result.points.push_back(point);
  }

  std::optional<std::size_t> best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const GridPoint& pt = result.points[g];
    if (pt.failed) continue;
    if (!best || pt.error < result.points[*best].error ||
        (pt.error == result.points[*best].error && pt.value < result.points[*best].value))
      best = g;
  }
  if (!best) throw NumericalError("every grid point failed; last error: " + last_failure);
  result.best = grid[*best];
  result.best_error = result.points[*best].error;
  result.model = fit_method(method, train, result.best, opt, holdout_projection[*best]);
  return result;
}

std::vector<ResultRow> evaluate_cv(const Dataset& train, const Dataset& test, const FoldPlan& folds,
                                   const std::vector<Method>& methods, const OptimConfig& opt,
                                   const std::optional<std::vector<double>>& grid) {
  std::vector<ResultRow> rows;
  for (Method m : methods) {
    const GridSearchResult gs = grid_search(m, grid ? *grid : default_grid(m, train), train, folds, opt);
    ResultRow row;
    row.protocol = "cv";
    row.method = m;
    row.hyper = gs.best;
    row.selection_error = gs.best_error;
    row.test_error = misclassification_error(predict_labels(gs.model, test.X), test.labels);
    rows.push_back(row);
  }
  return rows;
}

std::vector<ResultRow> evaluate_splits(const Dataset& data, const std::vector<Method>& methods, int repeats,
                                       std::array<double, 3> ratios, std::uint64_t seed, const OptimConfig& opt,
                                       const std::optional<std::vector<double>>& grid) {
  std::vector<ResultRow> rows;
  for (int rep = 0; rep < repeats; ++rep) {
    const SplitPlan plan = make_split(data.n(), ratios, seed + static_cast<std::uint64_t>(rep));
    std::vector<Index> train_rows = plan.train;
    train_rows.insert(train_rows.end(), plan.validation.begin(), plan.validation.end());
    const Dataset train = subset(data, train_rows);
    const Dataset test = subset(data, plan.test);
    HoldOut holdout;
    for (Index i = 0; i < static_cast<Index>(train_rows.size()); ++i)
      (i < static_cast<Index>(plan.train.size()) ? holdout.fit_rows : holdout.validation_rows).push_back(i);
    for (Method m : methods) {
      const GridSearchResult gs = grid_search(m, grid ? *grid : default_grid(m, train), train, holdout, opt);
      ResultRow row;
      row.protocol = "split";
      row.repeat = rep;
      row.method = m;
      row.hyper = gs.best;
      row.selection_error = gs.best_error;
      row.test_error = misclassification_error(predict_labels(gs.model, test.X), test.labels);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace opgd
