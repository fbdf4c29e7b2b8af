#include "emogan/linalg.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "emogan/errors.hpp"
#include "emogan/rng.hpp"

namespace emogan {

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& index) {
  Matrix out(static_cast<Eigen::Index>(index.size()), m.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= static_cast<std::size_t>(m.rows())) {
      throw ShapeError("take_rows: row index " + std::to_string(index[i]) + " out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(index[i]));
  }
  return out;
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) {
    throw ShapeError("hconcat: row counts differ (" + std::to_string(left.rows()) + " vs " +
                     std::to_string(right.rows()) + ")");
  }
  Matrix out(left.rows(), left.cols() + right.cols());
  out << left, right;
  return out;
}

Matrix vconcat(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  if (top.cols() != bottom.cols()) {
    throw ShapeError("vconcat: column counts differ (" + std::to_string(top.cols()) + " vs " +
                     std::to_string(bottom.cols()) + ")");
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

Matrix one_hot_rows(const Labels& ids, int num_classes) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(ids.size()), num_classes);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= num_classes) {
      throw ContractError("one_hot_rows: class id " + std::to_string(ids[i]) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    }
    out(static_cast<Eigen::Index>(i), ids[i]) = 1.0;
  }
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::uint64_t checksum(const Matrix& m, std::uint64_t seed) {
  const auto rows = static_cast<std::uint64_t>(m.rows());
  const auto cols = static_cast<std::uint64_t>(m.cols());
  std::uint64_t h = fnv1a(&rows, sizeof rows, seed);
  h = fnv1a(&cols, sizeof cols, h);
  return fnv1a(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace emogan
