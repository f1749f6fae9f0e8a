#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "opgd/errors.hpp"
#include "opgd/eval.hpp"
#include "support.hpp"

#include <algorithm>
#include <set>

using namespace opgd;
namespace ts = testing_support;

namespace {

// Six classes on a circle in the first two coordinates; any single direction
// leaves some pair of class means close together.
Dataset two_informative(std::uint64_t seed, int per_class) {
  std::mt19937_64 rng(seed);
  const int K = 6;
  Matrix X(K * per_class, 4);
  std::vector<int> y;
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < per_class; ++i) {
      const Index r = k * per_class + i;
      X(r, 0) = 6.0 * std::cos(2 * M_PI * k / K) + ts::normal(rng);
      X(r, 1) = 6.0 * std::sin(2 * M_PI * k / K) + ts::normal(rng);
      X(r, 2) = ts::normal(rng);
      X(r, 3) = ts::normal(rng);
      y.push_back(k);
    }
  return make_dataset(X, y, K);
}

}  // namespace

TEST_CASE("misclassification_error") {
  CHECK(misclassification_error({0, 1, 2}, {0, 1, 2}) == 0.0);
  CHECK(misclassification_error({1, 1}, {0, 0}) == 1.0);
  CHECK(misclassification_error({0, 1, 0, 1}, {0, 1, 1, 1}) == 0.25);
  CHECK_THROWS_AS(misclassification_error({0}, {0, 1}), ConfigError);
  CHECK_THROWS_AS(misclassification_error({}, {}), ConfigError);
}

TEST_CASE("adjusted_rand_index") {
  CHECK(adjusted_rand_index({0, 0, 1, 1, 2}, {0, 0, 1, 1, 2}) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1}) == doctest::Approx(1.0));
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(ts::pair_count_ari(a, b)).epsilon(1e-12));
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(-0.5));
  CHECK(adjusted_rand_index(a, b) == adjusted_rand_index(b, a));
  CHECK_THROWS_AS(adjusted_rand_index({0}, {0, 1}), ConfigError);

  std::mt19937_64 rng(1);
  double mean = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    std::vector<int> x(60), z(60);
    for (int i = 0; i < 60; ++i) {
      x[i] = ts::uniform_int(rng, 0, 2);
      z[i] = ts::uniform_int(rng, 0, 2);
    }
    mean += adjusted_rand_index(x, z) / reps;
  }
  CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("normalized_mutual_information") {
  const NmiResult same = normalized_mutual_information({0, 0, 1, 1, 2}, {1, 1, 2, 2, 0});
  CHECK(same.value == doctest::Approx(1.0));
  CHECK_FALSE(same.degenerate);
  const NmiResult flat = normalized_mutual_information({0, 0, 0, 0}, {0, 1, 0, 1});
  CHECK(flat.value == 0.0);
  CHECK(flat.degenerate);
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  CHECK(normalized_mutual_information(a, b).value == doctest::Approx(ts::entropy_nmi(a, b)));
  CHECK(normalized_mutual_information(a, b).value == doctest::Approx(0.0));
  const std::vector<int> c{0, 0, 0, 1, 1, 2}, d{0, 0, 1, 1, 2, 2};
  CHECK(normalized_mutual_information(c, d).value == doctest::Approx(ts::entropy_nmi(c, d)).epsilon(1e-12));
  CHECK(normalized_mutual_information(c, d).value == normalized_mutual_information(d, c).value);
}

TEST_CASE("metrics agree with exhaustive oracles for small partitions") {
  const auto parts = ts::partitions(6, 3);
  double worst = 0;
  for (const auto& x : parts)
    for (const auto& z : parts) {
      worst = std::max(worst, std::abs(adjusted_rand_index(x, z) - ts::pair_count_ari(x, z)));
      const NmiResult r = normalized_mutual_information(x, z);
      CHECK(r.value >= 0.0);
      CHECK(r.value <= 1.0);
      if (!r.degenerate) worst = std::max(worst, std::abs(r.value - ts::entropy_nmi(x, z)));
      CHECK(adjusted_rand_index(x, z) <= 1.0 + 1e-12);
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("make_split") {
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const SplitPlan s = make_split(100, {0.5, 0.25, 0.25}, seed);
    CHECK(s.train.size() == 50);
    CHECK(s.validation.size() == 25);
    CHECK(s.test.size() == 25);
    std::set<Index> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 100);
    const SplitPlan again = make_split(100, {0.5, 0.25, 0.25}, seed);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
  }
  CHECK(make_split(100, {0.5, 0.25, 0.25}, 0).train != make_split(100, {0.5, 0.25, 0.25}, 1).train);
  CHECK_THROWS_AS(make_split(10, {0.5, 0.5, 0.5}, 0), ConfigError);
  CHECK_THROWS_AS(make_split(10, {1.0, 0.0, 0.0}, 0), ConfigError);
}

TEST_CASE("make_folds") {
  SUBCASE("singleton groups give leave-one-out") {
    const FoldPlan f = make_folds(8, 8, {0, 1, 2, 3, 4, 5, 6, 7}, 0);
    for (int k = 0; k < 8; ++k) {
      CHECK(f.members(k).size() == 1);
      CHECK(f.complement(k).size() == 7);
    }
  }
  SUBCASE("groups stay together") {
    std::vector<int> groups;
    for (int g = 0; g < 15; ++g)
      for (int r = 0; r < 4; ++r) groups.push_back(g);
    const FoldPlan f = make_folds(60, 5, groups, 3);
    for (std::size_t i = 0; i < groups.size(); ++i)
      for (std::size_t j = 0; j < groups.size(); ++j)
        if (groups[i] == groups[j]) CHECK(f.fold[i] == f.fold[j]);
    CHECK_THROWS_AS(make_folds(60, 16, groups, 3), ConfigError);
  }
  SUBCASE("ungrouped folds are balanced and reproducible") {
    const FoldPlan f = make_folds(23, 5, {}, 11);
    for (int k = 0; k < 5; ++k) {
      const std::size_t m = f.members(k).size();
      CHECK((m == 4 || m == 5));
    }
    CHECK(make_folds(23, 5, {}, 11).fold == f.fold);
    CHECK_THROWS_AS(make_folds(23, 1, {}, 0), ConfigError);
  }
  const std::vector<Index> perm = shuffled_indices(10, 4);
  std::vector<Index> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 10; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("method names") {
  for (Method m : {Method::Opgd, Method::Lda, Method::Rda, Method::Save})
    CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("knn"), ConfigError);
}

TEST_CASE("default grids") {
  const Dataset d = two_informative(1, 10);
  CHECK(default_grid(Method::Opgd, d) == std::vector<double>{1, 2, 3, 4});
  CHECK(default_grid(Method::Save, d) == std::vector<double>{1, 2, 3, 4});
  CHECK(default_grid(Method::Lda, d) == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(default_grid(Method::Rda, d) == rda_grid(4));
}

TEST_CASE("grid_search") {
  const Dataset d = two_informative(2, 30);
  const SplitPlan split = make_split(d.n(), {0.5, 0.25, 0.25}, 5);
  HoldOut hold{split.train, split.validation};
  OptimConfig opt;

  SUBCASE("single grid value") {
    const GridSearchResult r = grid_search(Method::Lda, {2}, d, hold, opt);
    CHECK(r.best == 2);
    CHECK(r.points.size() == 1);
    CHECK(std::holds_alternative<LdaModel>(r.model));
  }
  SUBCASE("two informative directions are selected") {
    const GridSearchResult r = grid_search(Method::Opgd, {1, 2, 3}, d, hold, opt);
    CHECK(r.best == 2);
    CHECK(r.points[1].error < 0.05);
    CHECK(r.points[0].error > 0.1);
    const OpgdModel& m = std::get<OpgdModel>(r.model);
    CHECK(m.projection.cols() == 2);
  }
  SUBCASE("ties go to the smallest value") {
    Matrix X(8, 1);
    X << 0, 1, 2, 3, 0.5, 1.5, 2.5, 3.5;
    const Dataset flat = make_dataset(X, {0, 0, 0, 0, 1, 1, 1, 1}, 2);
    const FoldPlan folds = make_folds(8, 2, {}, 0);
    const GridSearchResult r = grid_search(Method::Rda, {0.0, 0.5, 1.0}, flat, folds, opt);
    bool all_equal = true;
    for (const GridPoint& g : r.points) all_equal = all_equal && g.error == r.points[0].error;
    if (all_equal) CHECK(r.best == 0.0);
    CHECK(r.best_error == std::min_element(r.points.begin(), r.points.end(), [](auto& a, auto& b) {
                            return a.error < b.error;
                          })->error);
  }
  SUBCASE("failed points are recorded") {
    const GridSearchResult r = grid_search(Method::Lda, {1, 9}, d, hold, opt);
    CHECK(r.points[1].failed);
    CHECK_FALSE(r.points[1].message.empty());
    CHECK(r.best == 1);
    CHECK_THROWS_AS(grid_search(Method::Lda, {9}, d, hold, opt), NumericalError);
  }
}

TEST_CASE("evaluate_cv and evaluate_splits") {
  const Dataset d = two_informative(3, 30);
  const Dataset test = two_informative(4, 20);
  OptimConfig opt;
  opt.max_iters = 50;
  const FoldPlan folds = make_folds(d.n(), 4, {}, 0);
  const auto rows = evaluate_cv(d, test, folds, {Method::Lda, Method::Opgd}, opt);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].method == Method::Lda);
  CHECK(rows[0].protocol == "cv");
  CHECK(rows[0].test_error < 0.1);
  CHECK(rows[1].test_error < 0.1);

  const auto split_rows = evaluate_splits(d, {Method::Rda}, 2, {0.5, 0.25, 0.25}, 7, opt);
  REQUIRE(split_rows.size() == 2);
  CHECK(split_rows[1].repeat == 1);
  const auto again = evaluate_splits(d, {Method::Rda}, 2, {0.5, 0.25, 0.25}, 7, opt);
  CHECK(again[1].test_error == split_rows[1].test_error);
  CHECK(again[1].hyper == split_rows[1].hyper);
}
