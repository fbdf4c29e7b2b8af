#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "emogan/losses.hpp"
#include "emogan/mlp.hpp"

namespace emogan {

// Scalar loss of a network output, with its gradient.
using OutputLoss = std::function<LossResult(const Matrix& output)>;

enum class ParameterKind { weight, bias };

struct GradientCheckReport {
  bool passed = true;
  double worst_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  // Location of the worst entry; meaningless when nothing was checked.
  std::size_t worst_layer = 0;
  ParameterKind worst_kind = ParameterKind::weight;
  Eigen::Index worst_index = 0;

  std::string describe() const;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;

// |a - n| / max(|a|, |n|, floor); the floor keeps near-zero gradients from
// amplifying finite-difference noise.
double relative_error(double analytic, double numeric, double floor = 1e-6);

// Compares `analytic` against central finite differences of loss(net(input))
// for every parameter. The network is copied, never mutated.
GradientCheckReport compare_gradients(const Mlp& net, const Matrix& input, const OutputLoss& loss,
                                      const Gradients& analytic, double tolerance,
                                      double step = kFiniteDifferenceStep);

// Runs forward/backward to obtain the analytic gradient, then compare_gradients.
GradientCheckReport gradient_check(const Mlp& net, const Matrix& input, const OutputLoss& loss,
                                   double tolerance);

}  // namespace emogan
