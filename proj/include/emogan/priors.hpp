#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "emogan/linalg.hpp"
#include "emogan/rng.hpp"

namespace emogan {

struct GaussianComponent {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
};

// Weighted mixture of 2-D Gaussians. Weights sum to 1, covariances are
// symmetric PSD; checked on construction.
class MixturePrior {
 public:
  MixturePrior(std::vector<GaussianComponent> components, std::vector<double> weights);

  std::size_t size() const { return components_.size(); }
  const std::vector<GaussianComponent>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }
  Matrix means() const;  // one component mean per row

  // Cholesky-like factor L with L L^T = covariance of component k.
  const Eigen::Matrix2d& factor(std::size_t k) const { return factors_[k]; }

 private:
  std::vector<GaussianComponent> components_;
  std::vector<double> weights_;
  std::vector<Eigen::Matrix2d> factors_;
};

// Zero-mean, identity-covariance normal.
struct NormalPrior {
  int dim = 20;

  explicit NormalPrior(int dim);
};

struct LabelSource {
  int num_classes = 4;
};

using Prior = std::variant<MixturePrior, NormalPrior>;

int prior_dim(const Prior& prior);

// Four components with means at separation * (1,0), (0,1), (-1,0), (0,-1),
// covariance stddev^2 I and equal weights.
MixturePrior orthogonal_mixture(double separation = 3.0, double stddev = 0.5);

struct PriorSample {
  Matrix values;
  Labels component;  // empty for a NormalPrior
};

// Component is drawn first, then the component's Gaussian, so `component`
// is the exact ground-truth mode of every row.
PriorSample sample(const MixturePrior& prior, std::size_t n, Rng& rng);
PriorSample sample(const NormalPrior& prior, std::size_t n, Rng& rng);
PriorSample sample(const Prior& prior, std::size_t n, Rng& rng);
PriorSample sample(const Prior& prior, std::size_t n, std::uint64_t seed);

// Mixture sample with every row forced to come from component `ids[i]`.
Matrix sample_components(const MixturePrior& prior, const Labels& ids, Rng& rng);

struct OneHotBatch {
  Matrix rows;
  Labels ids;
};

// Uniform class draws encoded as one-hot rows.
OneHotBatch one_hot(const LabelSource& source, std::size_t n, Rng& rng);
OneHotBatch one_hot(const LabelSource& source, std::size_t n, std::uint64_t seed);

}  // namespace emogan
