#include "emogan/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emogan/errors.hpp"

namespace emogan {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace

LossResult loss_mse(const Matrix& prediction, const Matrix& target) {
  require_same_shape(prediction, target, "loss_mse");
  LossResult r;
  const auto n = static_cast<double>(std::max<Eigen::Index>(prediction.rows(), 1));
  const Matrix diff = prediction - target;
  r.value = diff.squaredNorm() / n;
  r.gradient = (2.0 / n) * diff;
  return r;
}

LossResult loss_bce(const Matrix& probability, const Vector& labels) {
  if (probability.cols() != 1 || probability.rows() != labels.size()) {
    throw ShapeError("loss_bce: expected " + std::to_string(labels.size()) +
                     "x1 probabilities, got " + std::to_string(probability.rows()) + "x" +
                     std::to_string(probability.cols()));
  }
  LossResult r;
  r.gradient = Matrix::Zero(probability.rows(), 1);
  const auto n = static_cast<double>(std::max<Eigen::Index>(probability.rows(), 1));
  double total = 0.0;
  for (Eigen::Index i = 0; i < probability.rows(); ++i) {
    const double p = std::clamp(probability(i, 0), kBceEpsilon, 1.0 - kBceEpsilon);
    const double y = labels(i);
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    // Derivative evaluated at the clamped point so saturated outputs still
    // pass a finite signal back through the sigmoid.
    r.gradient(i, 0) = (p - y) / (p * (1.0 - p)) / n;
  }
  r.value = total / n;
  return r;
}

LossResult loss_bce(const Matrix& probability, double label) {
  return loss_bce(probability, Vector::Constant(probability.rows(), label));
}

LossResult loss_categorical(const Matrix& softmax_output, const Matrix& one_hot) {
  require_same_shape(softmax_output, one_hot, "loss_categorical");
  LossResult r;
  r.gradient = Matrix::Zero(softmax_output.rows(), softmax_output.cols());
  const auto n = static_cast<double>(std::max<Eigen::Index>(softmax_output.rows(), 1));
  double total = 0.0;
  for (Eigen::Index i = 0; i < one_hot.rows(); ++i) {
    Eigen::Index hot = -1;
    for (Eigen::Index j = 0; j < one_hot.cols(); ++j) {
      const double v = one_hot(i, j);
      if (v == 1.0 && hot < 0) {
        hot = j;
      } else if (v != 0.0) {
        hot = -2;
        break;
      }
    }
    if (hot < 0) {
      throw ContractError("loss_categorical: row " + std::to_string(i) + " is not one-hot");
    }
    if (std::abs(softmax_output.row(i).sum() - 1.0) > 1e-6) {
      throw ContractError("loss_categorical: row " + std::to_string(i) +
                          " of the softmax output does not sum to 1");
    }
    const double p = std::max(softmax_output(i, hot), 1e-12);
    total -= std::log(p);
    r.gradient(i, hot) = -1.0 / (p * n);
  }
  r.value = total / n;
  return r;
}

}  // namespace emogan
