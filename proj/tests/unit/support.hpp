#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "emogan/linalg.hpp"
#include "emogan/mlp.hpp"
#include "emogan/rng.hpp"

namespace testing {

using emogan::Matrix;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, emogan::Rng& rng,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Scalar re-evaluation of a network in long double, one unit at a time.
inline std::vector<long double> scalar_forward(const emogan::Mlp& net,
                                               const std::vector<long double>& x) {
  std::vector<long double> cur = x;
  for (const auto& l : net.layers()) {
    std::vector<long double> next(static_cast<std::size_t>(l.output_dim()));
    for (Eigen::Index j = 0; j < l.output_dim(); ++j) {
      long double s = l.bias(j);
      for (Eigen::Index i = 0; i < l.input_dim(); ++i) {
        s += cur[static_cast<std::size_t>(i)] * static_cast<long double>(l.weight(i, j));
      }
      next[static_cast<std::size_t>(j)] = s;
    }
    switch (l.activation) {
      case emogan::Activation::relu:
        for (auto& v : next) v = v > 0 ? v : 0;
        break;
      case emogan::Activation::sigmoid:
        for (auto& v : next) v = 1.0L / (1.0L + std::exp(-v));
        break;
      case emogan::Activation::softmax: {
        long double z = 0;
        for (auto v : next) z += std::exp(v);
        for (auto& v : next) v = std::exp(v) / z;
        break;
      }
      case emogan::Activation::linear:
        break;
    }
    cur = std::move(next);
  }
  return cur;
}

// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("emogan-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
