#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "emogan/metrics.hpp"
#include "emogan/mlp.hpp"
#include "emogan/rng.hpp"

// Independent reference implementations shared by unit and acceptance tests.
namespace oracles {

using emogan::Matrix;

// Cyclic Jacobi eigendecomposition of a symmetric matrix, in long double.
struct Eig {
  std::vector<long double> values;
  std::vector<std::vector<long double>> vectors;  // columns
};

inline Eig jacobi(const Matrix& m) {
  const std::size_t n = static_cast<std::size_t>(m.rows());
  std::vector<std::vector<long double>> a(n, std::vector<long double>(n));
  std::vector<std::vector<long double>> v(n, std::vector<long double>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    v[i][i] = 1.0L;
    for (std::size_t j = 0; j < n; ++j) a[i][j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0.0L;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-36L) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0L) continue;
        const long double theta = (a[q][q] - a[p][p]) / (2.0L * a[p][q]);
        const long double t = (theta >= 0 ? 1.0L : -1.0L) /
                              (std::fabs(theta) + std::sqrt(theta * theta + 1.0L));
        const long double c = 1.0L / std::sqrt(t * t + 1.0L);
        const long double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const long double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  Eig e;
  e.vectors = v;
  for (std::size_t i = 0; i < n; ++i) e.values.push_back(a[i][i]);
  return e;
}

inline Matrix jacobi_sqrt(const Matrix& m) {
  const Eig e = jacobi(m);
  const Eigen::Index n = m.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < e.values.size(); ++k) {
        s += e.vectors[static_cast<std::size_t>(i)][k] * std::sqrt(std::max(0.0L, e.values[k])) *
             e.vectors[static_cast<std::size_t>(j)][k];
      }
      out(i, j) = static_cast<double>(s);
    }
  }
  return out;
}

inline double fid(const emogan::GaussianStats& x, const emogan::GaussianStats& g) {
  const Matrix r = jacobi_sqrt(x.covariance);
  const Matrix inner = r * g.covariance * r;
  const Eig e = jacobi(0.5 * (inner + inner.transpose()));
  long double tr_sqrt = 0.0L;
  for (long double v : e.values) tr_sqrt += std::sqrt(std::max(0.0L, v));
  return (x.mean - g.mean).squaredNorm() + x.covariance.trace() + g.covariance.trace() -
         2.0 * static_cast<double>(tr_sqrt);
}

inline Matrix random_psd(int d, emogan::Rng& rng) {
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return a * a.transpose() + 0.1 * Matrix::Identity(d, d);
}

inline double relu_margin(const emogan::Mlp& net, const Matrix& x) {
  const emogan::ForwardCache c = net.forward(x);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    if (net.layer(k).activation != emogan::Activation::relu) continue;
    const Matrix pre = (c.inputs[k] * net.layer(k).weight).rowwise() + net.layer(k).bias;
    margin = std::min(margin, pre.cwiseAbs().minCoeff());
  }
  return margin;
}

inline emogan::RowVector random_row(Eigen::Index n, emogan::Rng& rng) {
  emogan::RowVector r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = rng.normal();
  return r;
}

// Central differences are meaningless across a relu kink, so keep every
// pre-activation clear of zero.
inline emogan::Mlp off_kink(emogan::Mlp net, const Matrix& x, emogan::Rng& rng) {
  do {
    for (auto& l : net.mutable_layers()) l.bias = 0.3 * random_row(l.bias.size(), rng);
  } while (relu_margin(net, x) < 1e-3);
  return net;
}

}  // namespace oracles
