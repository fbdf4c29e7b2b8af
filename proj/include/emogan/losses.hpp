#pragma once

#include "emogan/linalg.hpp"

namespace emogan {

struct LossResult {
  double value = 0.0;
  Matrix gradient;  // dLoss/dPrediction, same shape as the prediction
};

inline constexpr double kBceEpsilon = 1e-7;

// Mean over the batch of the squared L2 distance between rows.
LossResult loss_mse(const Matrix& prediction, const Matrix& target);

// Mean binary cross-entropy. `probability` is n x 1, `labels` holds 0/1 per
// row. Probabilities are clamped to [eps, 1 - eps] before the log.
LossResult loss_bce(const Matrix& probability, const Vector& labels);
LossResult loss_bce(const Matrix& probability, double label);

// Mean negative log-likelihood of the true class under softmax rows.
LossResult loss_categorical(const Matrix& softmax_output, const Matrix& one_hot);

}  // namespace emogan
