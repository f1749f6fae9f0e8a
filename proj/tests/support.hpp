#pragma once

// Shared generators and reference implementations for the test binaries. The
// references deliberately avoid the library's own helpers.

#include "opgd/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace testing_support {

using opgd::Dataset;
using opgd::Index;
using opgd::Matrix;
using opgd::Vector;

struct Instance {
  Dataset data;
  Matrix V;
};

inline double normal(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// n <= 50, p <= 8, p' <= 4, K <= 4, every class with at least 3 points.
inline Instance random_instance(std::uint64_t seed, int min_classes = 2) {
  std::mt19937_64 rng(seed);
  const int K = uniform_int(rng, min_classes, 4);
  const Index p = uniform_int(rng, 1, 8);
  const Index q = uniform_int(rng, 1, static_cast<int>(std::min<Index>(4, p)));
  std::vector<int> sizes(K);
  for (int& s : sizes) s = uniform_int(rng, 3, 50 / K);
  const Index n = std::accumulate(sizes.begin(), sizes.end(), Index{0});
  Matrix X(n, p);
  std::vector<int> labels;
  Index row = 0;
  for (int k = 0; k < K; ++k) {
    Vector mean(p);
    for (Index a = 0; a < p; ++a) mean[a] = 2.0 * normal(rng);
    Matrix A(p, p);
    for (Index a = 0; a < p; ++a)
      for (Index b = 0; b < p; ++b) A(a, b) = 0.6 * normal(rng) + (a == b ? 0.7 : 0.0);
    for (int s = 0; s < sizes[k]; ++s, ++row) {
      Vector z(p);
      for (Index a = 0; a < p; ++a) z[a] = normal(rng);
      X.row(row) = (mean + A * z).transpose();
      labels.push_back(k);
    }
  }
  Instance inst{opgd::make_dataset(std::move(X), std::move(labels), K), Matrix(p, q)};
  for (Index a = 0; a < p; ++a)
    for (Index t = 0; t < q; ++t) inst.V(a, t) = normal(rng);
  return inst;
}

// Per-class moments computed with explicit loops in long double.
struct RefClass {
  long double prior;
  std::vector<long double> mean;
  std::vector<std::vector<long double>> cov;
};

inline std::vector<RefClass> reference_moments(const Dataset& d) {
  const Index p = d.p();
  std::vector<RefClass> out(d.num_classes);
  std::vector<long double> count(d.num_classes, 0);
  for (auto& c : out) {
    c.mean.assign(p, 0);
    c.cov.assign(p, std::vector<long double>(p, 0));
  }
  for (Index i = 0; i < d.n(); ++i) {
    const int y = d.labels[i];
    count[y] += 1;
    for (Index a = 0; a < p; ++a) out[y].mean[a] += d.X(i, a);
  }
  for (int k = 0; k < d.num_classes; ++k)
    for (auto& m : out[k].mean) m /= count[k];
  for (Index i = 0; i < d.n(); ++i) {
    const int y = d.labels[i];
    for (Index a = 0; a < p; ++a)
      for (Index b = 0; b < p; ++b)
        out[y].cov[a][b] += (d.X(i, a) - out[y].mean[a]) * (d.X(i, b) - out[y].mean[b]);
  }
  for (int k = 0; k < d.num_classes; ++k) {
    out[k].prior = count[k] / static_cast<long double>(d.n());
    for (auto& row : out[k].cov)
      for (auto& v : row) v /= count[k];
  }
  return out;
}

inline const long double kLog2PiL = std::log(2.0L * 3.14159265358979323846264338327950288L);

// log pi_k + log phi_k(V^T x_i) for every i, k.
inline std::vector<std::vector<long double>> reference_log_joint(const Dataset& d, const Matrix& V,
                                                                 const std::vector<RefClass>& cls) {
  const Index p = d.p();
  const Index q = V.cols();
  std::vector<std::vector<long double>> out(d.n(), std::vector<long double>(cls.size()));
  for (std::size_t k = 0; k < cls.size(); ++k) {
    std::vector<long double> pm(q, 0), pv(q, 0);
    for (Index t = 0; t < q; ++t)
      for (Index a = 0; a < p; ++a) {
        pm[t] += V(a, t) * cls[k].mean[a];
        for (Index b = 0; b < p; ++b) pv[t] += V(a, t) * cls[k].cov[a][b] * V(b, t);
      }
    for (Index i = 0; i < d.n(); ++i) {
      long double l = std::log(cls[k].prior);
      for (Index t = 0; t < q; ++t) {
        long double u = 0;
        for (Index a = 0; a < p; ++a) u += V(a, t) * static_cast<long double>(d.X(i, a));
        l += -0.5L * (kLog2PiL + std::log(pv[t])) - 0.5L * (u - pm[t]) * (u - pm[t]) / pv[t];
      }
      out[i][k] = l;
    }
  }
  return out;
}

// Sum over observations of the log posterior of the observed label.
inline long double reference_loglik(const Dataset& d, const Matrix& V, const std::vector<RefClass>& cls) {
  const auto lj = reference_log_joint(d, V, cls);
  long double total = 0;
  for (Index i = 0; i < d.n(); ++i) {
    const long double top = *std::max_element(lj[i].begin(), lj[i].end());
    long double s = 0;
    for (long double v : lj[i]) s += std::exp(v - top);
    total += lj[i][d.labels[i]] - top - std::log(s);
  }
  return total;
}

inline Matrix central_difference(const std::function<long double(const Matrix&)>& f, const Matrix& V, double h) {
  Matrix G(V.rows(), V.cols());
  for (Index a = 0; a < V.rows(); ++a)
    for (Index t = 0; t < V.cols(); ++t) {
      Matrix plus = V, minus = V;
      plus(a, t) += h;
      minus(a, t) -= h;
      G(a, t) = static_cast<double>((f(plus) - f(minus)) / (2.0L * h));
    }
  return G;
}

// Relative error with a small absolute floor for gradients that vanish identically.
inline double relative_error(const Matrix& analytic, const Matrix& reference) {
  return (analytic - reference).norm() / std::max({analytic.norm(), reference.norm(), 1e-6});
}

// Gaussian naive Bayes with MLE variances: argmax_k log pi_k + sum_j log N(x_j; m_kj, s_kj).
inline std::vector<int> naive_bayes_predict(const Dataset& train, const Matrix& X) {
  const auto cls = reference_moments(train);
  std::vector<int> out;
  for (Index i = 0; i < X.rows(); ++i) {
    int best = 0;
    long double best_v = -INFINITY;
    for (std::size_t k = 0; k < cls.size(); ++k) {
      long double v = std::log(cls[k].prior);
      for (Index j = 0; j < X.cols(); ++j) {
        const long double s = cls[k].cov[j][j];
        const long double d = X(i, j) - cls[k].mean[j];
        v += -0.5L * (kLog2PiL + std::log(s)) - 0.5L * d * d / s;
      }
      if (v > best_v) {
        best_v = v;
        best = static_cast<int>(k);
      }
    }
    out.push_back(best);
  }
  return out;
}

// Pair-counting ARI: a = pairs together in both, b/c = together in one only, d = apart in both.
inline double pair_count_ari(const std::vector<int>& x, const std::vector<int>& y) {
  long double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const bool sx = x[i] == x[j], sy = y[i] == y[j];
      if (sx && sy) a += 1;
      else if (sx) b += 1;
      else if (sy) c += 1;
      else d += 1;
    }
  const long double den = (a + b) * (b + d) + (a + c) * (c + d);
  if (den == 0) return 1.0;
  return static_cast<double>(2 * (a * d - b * c) / den);
}

// NMI = (H(x) + H(y) - H(x, y)) / sqrt(H(x) H(y)), 0 when either entropy vanishes.
inline double entropy_nmi(const std::vector<int>& x, const std::vector<int>& y) {
  const long double n = static_cast<long double>(x.size());
  auto entropy = [&](const std::vector<long long>& keys) {
    std::vector<long long> sorted = keys;
    std::sort(sorted.begin(), sorted.end());
    long double h = 0;
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const long double pr = static_cast<long double>(j - i) / n;
      h -= pr * std::log(pr);
      i = j;
    }
    return h;
  };
  std::vector<long long> kx, ky, kxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    kx.push_back(x[i]);
    ky.push_back(y[i]);
    kxy.push_back(static_cast<long long>(x[i]) * 1000 + y[i]);
  }
  const long double hx = entropy(kx), hy = entropy(ky);
  if (hx <= 0 || hy <= 0) return 0.0;
  const long double mi = hx + hy - entropy(kxy);
  return static_cast<double>(std::clamp(mi / std::sqrt(hx * hy), 0.0L, 1.0L));
}

// All set partitions of n elements into at most `max_blocks` blocks, as restricted growth strings.
inline std::vector<std::vector<int>> partitions(int n, int max_blocks) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (int b = 0; b <= std::min(used, max_blocks - 1); ++b) {
      cur[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  rec(0, 0);
  return out;
}

// 5-D data with three clusters informative in the first two coordinates.
struct Labeled {
  Matrix X;
  std::vector<int> y;
};

inline Labeled three_cluster_synthetic(std::uint64_t seed, int per_cluster = 50, double sep = 5.0) {
  std::mt19937_64 rng(seed);
  const double mu[3][2] = {{0, 0}, {sep, 0}, {sep / 2, sep * 0.866}};
  Labeled s{Matrix(3 * per_cluster, 5), {}};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < per_cluster; ++i) {
      const int r = k * per_cluster + i;
      s.y.push_back(k);
      s.X(r, 0) = mu[k][0] + normal(rng);
      s.X(r, 1) = mu[k][1] + normal(rng);
      for (int j = 2; j < 5; ++j) s.X(r, j) = 2.0 * normal(rng);
    }
  return s;
}

// Three clusters separated along x1 (with a smaller offset in x2); x3 is a near copy of
// x1 so that (x1, x3) are correlated at about 0.9999; x4 and x5 are noise.
inline Labeled collinear_synthetic(std::uint64_t seed, int per_cluster = 100, double sep = 3.0, double offset = 1.5) {
  std::mt19937_64 rng(seed);
  const double mx[3] = {0, 2 * sep, sep};
  const double my[3] = {0, 0, offset};
  Labeled s{Matrix(3 * per_cluster, 5), {}};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < per_cluster; ++i) {
      const int r = k * per_cluster + i;
      s.y.push_back(k);
      const double a = mx[k] + normal(rng);
      s.X(r, 0) = a;
      s.X(r, 1) = my[k] + normal(rng);
      s.X(r, 2) = a + 0.0141 * sep * normal(rng);
      s.X(r, 3) = normal(rng);
      s.X(r, 4) = normal(rng);
    }
  return s;
}

inline double max_principal_angle(const Matrix& A, const Matrix& B) {
  const Eigen::HouseholderQR<Matrix> qa(A), qb(B);
  const Matrix Qa = qa.householderQ() * Matrix::Identity(A.rows(), A.cols());
  const Matrix Qb = qb.householderQ() * Matrix::Identity(B.rows(), B.cols());
  const Eigen::JacobiSVD<Matrix> svd(Qa.transpose() * Qb);
  const double smallest = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smallest);
}

}  // namespace testing_support
