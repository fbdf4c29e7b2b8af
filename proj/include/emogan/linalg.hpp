#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace emogan {

// Row-major so one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Labels = std::vector<int>;

// Rows of `m` selected by `index`, in index order.
Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& index);

// [left | right], requires equal row counts.
Matrix hconcat(const Matrix& left, const Matrix& right);

// [top; bottom], requires equal column counts.
Matrix vconcat(const Matrix& top, const Matrix& bottom);

// One-hot rows for class ids in [0, num_classes).
Matrix one_hot_rows(const Labels& ids, int num_classes);

bool all_finite(const Matrix& m);

// FNV-1a over the raw bytes of every entry; used for parameter isolation checks.
std::uint64_t checksum(const Matrix& m, std::uint64_t seed = 1469598103934665603ULL);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace emogan
