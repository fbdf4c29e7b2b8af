#include "emogan/optimizer.hpp"

#include <cmath>
#include <string>

#include "emogan/errors.hpp"

namespace emogan {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("SgdConfig: learning rate must be positive, got " +
                      std::to_string(learning_rate));
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("SgdConfig: momentum must lie in [0, 1), got " + std::to_string(momentum));
  }
}

void sgd_step(Mlp& net, const Gradients& gradients, const SgdConfig& config) {
  if (gradients.layers.size() != net.num_layers()) {
    throw ShapeError("sgd_step: " + std::to_string(gradients.layers.size()) +
                     " layer gradients for a " + std::to_string(net.num_layers()) +
                     "-layer network");
  }
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const auto& g = gradients.layers[i];
    const auto& l = net.layer(i);
    if (g.weight.rows() != l.weight.rows() || g.weight.cols() != l.weight.cols() ||
        g.bias.size() != l.bias.size()) {
      throw ShapeError("sgd_step: gradient shape mismatch at layer " + std::to_string(i));
    }
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      throw DivergenceError("sgd_step: non-finite gradient at layer " + std::to_string(i),
                            static_cast<std::ptrdiff_t>(i));
    }
  }
  auto& layers = net.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const auto& g = gradients.layers[i];
    l.weight_velocity = config.momentum * l.weight_velocity - config.learning_rate * g.weight;
    l.bias_velocity = config.momentum * l.bias_velocity - config.learning_rate * g.bias;
    l.weight += l.weight_velocity;
    l.bias += l.bias_velocity;
  }
}

}  // namespace emogan
