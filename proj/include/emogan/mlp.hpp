#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "emogan/linalg.hpp"
#include "emogan/rng.hpp"

namespace emogan {

enum class Activation { relu, sigmoid, softmax, linear };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// Affine map x -> act(x W + b). W is (in x out) so a batch is multiplied
// from the left, one sample per row.
struct Layer {
  Matrix weight;
  RowVector bias;
  Activation activation = Activation::linear;
  Matrix weight_velocity;
  RowVector bias_velocity;

  Eigen::Index input_dim() const { return weight.rows(); }
  Eigen::Index output_dim() const { return weight.cols(); }
};

class Mlp;

// Per-layer inputs and activated outputs of one forward pass. Bound to the
// network and the parameter version that produced it.
struct ForwardCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> outputs;
  const Mlp* owner = nullptr;
  std::uint64_t version = 0;

  const Matrix& output() const { return outputs.back(); }
};

struct LayerGradient {
  Matrix weight;
  RowVector bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  Matrix input;
};

class Mlp {
 public:
  Mlp() = default;

  // Glorot-uniform weights, zero biases, zero momentum. `dims` has one more
  // entry than `activations`.
  Mlp(const std::vector<int>& dims, const std::vector<Activation>& activations, Rng& rng);

  // All parameters zero.
  static Mlp zeros(const std::vector<int>& dims, const std::vector<Activation>& activations);

  // Takes ownership of hand-built layers; validates chaining.
  static Mlp from_layers(std::vector<Layer> layers);

  std::size_t num_layers() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  int input_dim() const;
  int output_dim() const;
  std::vector<int> dims() const;
  std::size_t parameter_count() const;

  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }

  // Mutable access invalidates outstanding forward caches.
  std::vector<Layer>& mutable_layers() {
    ++version_;
    return layers_;
  }

  ForwardCache forward(const Matrix& batch) const;
  Matrix predict(const Matrix& batch) const;

  // Gradients of a scalar loss given dLoss/dOutput.
  Gradients backward(const ForwardCache& cache, const Matrix& upstream) const;

  std::uint64_t version() const { return version_; }
  std::uint64_t parameter_checksum() const;
  std::uint64_t momentum_checksum() const;

  void reset_momentum();

 private:
  void validate_chain() const;

  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

Matrix apply_activation(Activation a, const Matrix& pre);

}  // namespace emogan
