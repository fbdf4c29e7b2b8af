#include "emogan/mlp.hpp"

#include <cmath>
#include <string>

#include "emogan/errors.hpp"

namespace emogan {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::softmax:
      return "softmax";
    case Activation::linear:
      return "linear";
  }
  return "linear";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "softmax") return Activation::softmax;
  if (name == "linear") return Activation::linear;
  throw ParseError("unknown activation '" + std::string(name) + "'");
}

Matrix apply_activation(Activation a, const Matrix& pre) {
  switch (a) {
    case Activation::relu:
      return pre.cwiseMax(0.0);
    case Activation::sigmoid:
      return pre.unaryExpr([](double v) {
        // Split by sign so exp never overflows.
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
    case Activation::softmax: {
      Matrix out(pre.rows(), pre.cols());
      for (Eigen::Index r = 0; r < pre.rows(); ++r) {
        const double peak = pre.row(r).maxCoeff();
        out.row(r) = (pre.row(r).array() - peak).exp();
        out.row(r) /= out.row(r).sum();
      }
      return out;
    }
    case Activation::linear:
      return pre;
  }
  return pre;
}

namespace {

Layer make_layer(int in, int out, Activation act) {
  Layer l;
  l.weight = Matrix::Zero(in, out);
  l.bias = RowVector::Zero(out);
  l.activation = act;
  l.weight_velocity = Matrix::Zero(in, out);
  l.bias_velocity = RowVector::Zero(out);
  return l;
}

void check_dims(const std::vector<int>& dims, const std::vector<Activation>& activations) {
  if (dims.size() != activations.size() + 1) {
    throw ShapeError("Mlp: " + std::to_string(dims.size()) + " dims for " +
                     std::to_string(activations.size()) + " activations");
  }
  for (int d : dims) {
    if (d <= 0) throw ShapeError("Mlp: layer width must be positive, got " + std::to_string(d));
  }
}

}  // namespace

Mlp::Mlp(const std::vector<int>& dims, const std::vector<Activation>& activations, Rng& rng) {
  check_dims(dims, activations);
  layers_.reserve(activations.size());
  for (std::size_t i = 0; i < activations.size(); ++i) {
    Layer l = make_layer(dims[i], dims[i + 1], activations[i]);
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
    for (Eigen::Index k = 0; k < l.weight.size(); ++k) {
      l.weight.data()[k] = rng.uniform(-limit, limit);
    }
    layers_.push_back(std::move(l));
  }
}

Mlp Mlp::zeros(const std::vector<int>& dims, const std::vector<Activation>& activations) {
  check_dims(dims, activations);
  Mlp net;
  for (std::size_t i = 0; i < activations.size(); ++i) {
    net.layers_.push_back(make_layer(dims[i], dims[i + 1], activations[i]));
  }
  return net;
}

Mlp Mlp::from_layers(std::vector<Layer> layers) {
  Mlp net;
  net.layers_ = std::move(layers);
  for (auto& l : net.layers_) {
    if (l.bias.size() != l.weight.cols()) {
      throw ShapeError("Mlp: bias width does not match weight columns");
    }
    if (l.weight_velocity.rows() != l.weight.rows() ||
        l.weight_velocity.cols() != l.weight.cols()) {
      l.weight_velocity = Matrix::Zero(l.weight.rows(), l.weight.cols());
    }
    if (l.bias_velocity.size() != l.bias.size()) l.bias_velocity = RowVector::Zero(l.bias.size());
  }
  net.validate_chain();
  return net;
}

void Mlp::validate_chain() const {
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i - 1].output_dim() != layers_[i].input_dim()) {
      throw ShapeError("Mlp: layer " + std::to_string(i - 1) + " outputs " +
                       std::to_string(layers_[i - 1].output_dim()) + " but layer " +
                       std::to_string(i) + " expects " + std::to_string(layers_[i].input_dim()));
    }
  }
}

int Mlp::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().input_dim());
}

int Mlp::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().output_dim());
}

std::vector<int> Mlp::dims() const {
  std::vector<int> d;
  if (layers_.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.output_dim()));
  return d;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

ForwardCache Mlp::forward(const Matrix& batch) const {
  ForwardCache cache;
  cache.owner = this;
  cache.version = version_;
  cache.inputs.reserve(layers_.size());
  cache.outputs.reserve(layers_.size());
  const Matrix* current = &batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (current->cols() != l.input_dim()) {
      throw ShapeError("forward: layer " + std::to_string(i) + " expects " +
                       std::to_string(l.input_dim()) + " inputs, got " +
                       std::to_string(current->cols()));
    }
    cache.inputs.push_back(*current);
    Matrix pre = *current * l.weight;
    pre.rowwise() += l.bias;
    cache.outputs.push_back(apply_activation(l.activation, pre));
    current = &cache.outputs.back();
  }
  if (layers_.empty()) cache.outputs.push_back(batch);
  return cache;
}

Matrix Mlp::predict(const Matrix& batch) const {
  Matrix current = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (current.cols() != l.input_dim()) {
      throw ShapeError("forward: layer " + std::to_string(i) + " expects " +
                       std::to_string(l.input_dim()) + " inputs, got " +
                       std::to_string(current.cols()));
    }
    Matrix pre = current * l.weight;
    pre.rowwise() += l.bias;
    current = apply_activation(l.activation, pre);
  }
  return current;
}

Gradients Mlp::backward(const ForwardCache& cache, const Matrix& upstream) const {
  if (cache.owner != this || cache.version != version_ ||
      cache.inputs.size() != layers_.size()) {
    throw ContractError("backward: forward cache is stale or belongs to another network");
  }
  Gradients grads;
  if (layers_.empty()) {
    grads.input = upstream;
    return grads;
  }
  const Matrix& out = cache.output();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw ShapeError("backward: upstream gradient is " + std::to_string(upstream.rows()) + "x" +
                     std::to_string(upstream.cols()) + ", output is " +
                     std::to_string(out.rows()) + "x" + std::to_string(out.cols()));
  }
  grads.layers.resize(layers_.size());
  Matrix delta = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& l = layers_[k];
    const Matrix& y = cache.outputs[k];
    // delta becomes dLoss/d(pre-activation).
    switch (l.activation) {
      case Activation::relu:
        delta = (y.array() > 0.0).select(delta, 0.0);
        break;
      case Activation::sigmoid:
        delta = delta.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
        break;
      case Activation::softmax: {
        const Vector dot = delta.cwiseProduct(y).rowwise().sum();
        delta = y.cwiseProduct((delta.colwise() - dot));
        break;
      }
      case Activation::linear:
        break;
    }
    grads.layers[k].weight = cache.inputs[k].transpose() * delta;
    grads.layers[k].bias = delta.colwise().sum();
    delta = delta * l.weight.transpose();
  }
  grads.input = std::move(delta);
  return grads;
}

std::uint64_t Mlp::parameter_checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& l : layers_) {
    h = checksum(l.weight, h);
    h = checksum(l.bias, h);
  }
  return h;
}

std::uint64_t Mlp::momentum_checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& l : layers_) {
    h = checksum(l.weight_velocity, h);
    h = checksum(l.bias_velocity, h);
  }
  return h;
}

void Mlp::reset_momentum() {
  for (auto& l : layers_) {
    l.weight_velocity.setZero();
    l.bias_velocity.setZero();
  }
}

}  // namespace emogan
