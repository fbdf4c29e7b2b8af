#pragma once

#include "emogan/mlp.hpp"

namespace emogan {

struct SgdConfig {
  double learning_rate = 0.001;
  double momentum = 0.0;

  // Throws ConfigError unless learning_rate > 0 and momentum in [0, 1).
  void validate() const;
};

// Classical momentum:
//   velocity <- momentum * velocity - lr * gradient
//   parameter <- parameter + velocity
// Throws DivergenceError (with the layer index) on non-finite gradients,
// before touching any parameter.
void sgd_step(Mlp& net, const Gradients& gradients, const SgdConfig& config);

}  // namespace emogan
