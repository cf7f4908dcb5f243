#pragma once

// Test-only helpers: random instances and independent numerical oracles.

#include <cmath>
#include <functional>
#include <random>

#include "rglm/core.hpp"
#include "rglm/dataset.hpp"

namespace rglm::test {

using Vec = Vector<double>;
using Mat = Matrix<double>;

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = nd(rng);
  return X;
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
  return random_matrix(rng, d, 1, scale);
}

inline Dataset random_binary_dataset(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  Dataset data;
  data.X = random_matrix(rng, n, d);
  std::bernoulli_distribution coin(0.5);
  data.z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) data.z[i] = coin(rng) ? 1.0 : 0.0;
  return data;
}

inline Dataset random_linear_dataset(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  Dataset data;
  data.X = random_matrix(rng, n, d);
  data.z = random_vector(rng, n, 2.0);
  return data;
}

/// Central finite-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

/// Central finite-difference Jacobian of a vector function (columns = d/dx_j).
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-5) {
  Mat J(x.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

/// Relative error with an absolute floor so near-zero quantities compare sanely.
inline double rel_err(const Mat& a, const Mat& b, double floor = 1.0) {
  return (a - b).norm() / std::max(floor, b.norm());
}

/// Orthonormal-design matrix: X'X/n = I.
inline Mat orthonormal_design(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  Mat A = random_matrix(rng, n, d);
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = qr.householderQ() * Mat::Identity(n, d);
  return Q * std::sqrt(static_cast<double>(n));
}

}  // namespace rglm::test
