#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "opgd/core.hpp"
#include "opgd/errors.hpp"
#include "support.hpp"

using namespace opgd;
namespace ts = testing_support;

namespace {

Dataset one_dim(std::vector<double> x, std::vector<int> y, int K) {
  Matrix X(static_cast<Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) X(static_cast<Index>(i), 0) = x[i];
  return make_dataset(X, std::move(y), K);
}

}  // namespace

TEST_CASE("estimate_class_model on a hand-computed 1-D example") {
  const Dataset d = one_dim({0, 2, 10, 12}, {0, 0, 1, 1}, 2);
  const GaussianClassModel m = estimate_class_model(d);
  CHECK(m.priors()[0] == 0.5);
  CHECK(m.priors()[1] == 0.5);
  CHECK(m.means[0][0] == doctest::Approx(1.0));
  CHECK(m.means[1][0] == doctest::Approx(11.0));
  CHECK(m.covariances[0](0, 0) == doctest::Approx(1.0));
  CHECK(m.covariances[1](0, 0) == doctest::Approx(1.0));
}

TEST_CASE("estimate_class_model with symmetric pairs") {
  Matrix X(4, 2);
  X << 1, 2, -1, -2, 5, 5, 3, 7;
  const GaussianClassModel m = estimate_class_model(make_dataset(X, {0, 0, 1, 1}, 2));
  Matrix expected0(2, 2), expected1(2, 2);
  expected0 << 1, 2, 2, 4;
  expected1 << 1, -1, -1, 1;
  CHECK((m.covariances[0] - expected0).norm() < 1e-12);
  CHECK((m.covariances[1] - expected1).norm() < 1e-12);
}

TEST_CASE("estimate_class_model counting identities and symmetry") {
  for (int s = 0; s < 30; ++s) {
    const Dataset d = ts::random_instance(100 + s).data;
    const GaussianClassModel m = estimate_class_model(d);
    Index total = 0;
    for (Index c : m.counts) total += c;
    CHECK(total == d.n());
    CHECK(std::abs(m.priors().sum() - 1.0) <= 1e-12);
    for (int k = 0; k < m.size(); ++k) {
      CHECK(m.priors()[k] == static_cast<double>(m.counts[k]) / static_cast<double>(d.n()));
      const Matrix& S = m.covariances[k];
      CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, S.cwiseAbs().maxCoeff()));
      const Eigen::SelfAdjointEigenSolver<Matrix> es(S);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, S.trace()));
    }
  }
}

TEST_CASE("estimate_class_model is invariant to row order") {
  const Dataset d = ts::random_instance(5).data;
  std::vector<Index> rows(static_cast<std::size_t>(d.n()));
  for (Index i = 0; i < d.n(); ++i) rows[static_cast<std::size_t>(i)] = d.n() - 1 - i;
  const GaussianClassModel a = estimate_class_model(d);
  const GaussianClassModel b = estimate_class_model(subset(d, rows));
  for (int k = 0; k < a.size(); ++k) {
    CHECK((a.means[k] - b.means[k]).norm() < 1e-12);
    CHECK((a.covariances[k] - b.covariances[k]).norm() < 1e-10);
  }
}

TEST_CASE("estimate_class_model rejects a class with one observation") {
  const Dataset d = one_dim({0, 1, 5}, {0, 0, 1}, 2);
  CHECK_THROWS_AS(estimate_class_model(d), DegenerateClassError);
  try {
    estimate_class_model(d);
  } catch (const DegenerateClassError& e) {
    CHECK(std::string(e.what()).find("class") != std::string::npos);
  }
}

TEST_CASE("compute_scatter decomposition") {
  SUBCASE("single class") {
    const Dataset d = make_dataset(ts::random_instance(3).data.X, {}, 0);
    Dataset labeled = d;
    labeled.labels.assign(static_cast<std::size_t>(d.n()), 0);
    labeled.num_classes = 1;
    labeled.class_names = {"1"};
    const ScatterMatrices s = compute_scatter(labeled, estimate_class_model(labeled));
    CHECK(s.between.norm() < 1e-12);
    CHECK((s.within - s.total).norm() < 1e-10);
  }
  SUBCASE("two 1-D classes with means +-m") {
    const Dataset d = one_dim({-3 - 1, -3 + 1, 3 - 1, 3 + 1}, {0, 0, 1, 1}, 2);
    const ScatterMatrices s = compute_scatter(d, estimate_class_model(d));
    CHECK(s.within(0, 0) == doctest::Approx(1.0));
    CHECK(s.between(0, 0) == doctest::Approx(9.0));
  }
  SUBCASE("random data: pooled identity and between rank") {
    for (int seed = 0; seed < 30; ++seed) {
      const Dataset d = ts::random_instance(200 + seed).data;
      const ScatterMatrices s = compute_scatter(d, estimate_class_model(d));
      CHECK((s.within + s.between - s.total).norm() <= 1e-8 * s.total.norm());
      CHECK((s.total - covariance_mle(d.X)).norm() <= 1e-8 * s.total.norm());
      const Eigen::JacobiSVD<Matrix> svd(s.between);
      const Vector sv = svd.singularValues();
      Index rank = 0;
      for (Index i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-8 * sv[0]) ++rank;
      CHECK(rank <= d.num_classes - 1);
    }
  }
}

TEST_CASE("diag_congruence") {
  std::mt19937_64 rng(1);
  const Index p = 5, q = 3;
  Matrix S(p, p), V(p, q);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) S(i, j) = ts::normal(rng);
  S = (S + S.transpose()).eval();
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < q; ++j) V(i, j) = ts::normal(rng);

  CHECK((diag_congruence(Matrix::Identity(p, p), S) - S.diagonal()).norm() < 1e-14);
  CHECK((diag_congruence(V, Matrix::Identity(p, p)) - V.colwise().squaredNorm().transpose()).norm() < 1e-12);
  const Vector got = diag_congruence(V, S);
  for (Index t = 0; t < q; ++t) {
    double ref = 0;
    for (Index a = 0; a < p; ++a)
      for (Index b = 0; b < p; ++b) ref += V(a, t) * S(a, b) * V(b, t);
    CHECK(std::abs(got[t] - ref) < 1e-12);
  }
  CHECK((diag_congruence(2.5 * V, S) - 6.25 * got).norm() < 1e-10);
}

TEST_CASE("sphere") {
  SUBCASE("1-D variance 4") {
    const Dataset d = one_dim({-2, 2, -2, 2}, {}, 0);
    const Sphering s = sphere(d);
    CHECK(s.transform(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("random full-rank data") {
    for (int seed = 0; seed < 10; ++seed) {
      const Dataset d = ts::random_instance(300 + seed).data;
      if (d.n() <= d.p() + 2) continue;
      const Sphering s = sphere(d);
      CHECK((covariance_mle(s.data.X) - Matrix::Identity(d.p(), d.p())).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("white data stays white") {
    Matrix X(4, 2);
    X << 1, 1, 1, -1, -1, 1, -1, -1;
    const Sphering s = sphere(make_dataset(X));
    CHECK((covariance_mle(s.data.X) - Matrix::Identity(2, 2)).norm() < 1e-12);
  }
  SUBCASE("collinear data") {
    Matrix X(5, 2);
    X << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
    CHECK_THROWS_AS(sphere(make_dataset(X)), CollinearityError);
  }
}

TEST_CASE("dataset validation") {
  Matrix X(3, 1);
  X << 1, 2, 3;
  CHECK_THROWS_AS(make_dataset(X, {0, 2, 2}, 3), DataError);  // class 1 absent
  X(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_dataset(X), DataError);
}

TEST_CASE("argmax and log_sum_exp") {
  Eigen::RowVectorXd r(4);
  r << 1, 3, 3, 2;
  CHECK(argmax(r) == 1);
  r << 1000, 1000, -5, 0;
  CHECK(log_sum_exp(r) == doctest::Approx(1000 + std::log(2.0)));
}
