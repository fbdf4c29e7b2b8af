#include "emogan/priors.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "emogan/errors.hpp"

namespace emogan {

MixturePrior::MixturePrior(std::vector<GaussianComponent> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty()) throw ConfigError("MixturePrior: no components");
  if (components_.size() != weights_.size()) {
    throw ConfigError("MixturePrior: " + std::to_string(components_.size()) + " components but " +
                      std::to_string(weights_.size()) + " weights");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ConfigError("MixturePrior: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("MixturePrior: weights sum to " + std::to_string(total) + ", expected 1");
  }
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const Eigen::Matrix2d& c = components_[k].covariance;
    if (std::abs(c(0, 1) - c(1, 0)) > 1e-12) {
      throw ConfigError("MixturePrior: covariance " + std::to_string(k) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(c);
    if (eig.eigenvalues().minCoeff() < -1e-12) {
      throw ConfigError("MixturePrior: covariance " + std::to_string(k) + " is not PSD");
    }
    // Symmetric square root doubles as a sampling factor and tolerates
    // singular (PSD but not PD) covariances.
    const Eigen::Vector2d root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factors_.push_back(eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose());
  }
}

Matrix MixturePrior::means() const {
  Matrix m(static_cast<Eigen::Index>(components_.size()), 2);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    m.row(static_cast<Eigen::Index>(k)) = components_[k].mean.transpose();
  }
  return m;
}

NormalPrior::NormalPrior(int d) : dim(d) {
  if (d < 1) throw ConfigError("NormalPrior: dim must be >= 1, got " + std::to_string(d));
}

int prior_dim(const Prior& prior) {
  if (const auto* normal = std::get_if<NormalPrior>(&prior)) return normal->dim;
  return 2;
}

MixturePrior orthogonal_mixture(double separation, double stddev) {
  if (!(separation > 0.0) || !(stddev > 0.0)) {
    throw ConfigError("orthogonal_mixture: separation and stddev must be positive");
  }
  const Eigen::Matrix2d cov = stddev * stddev * Eigen::Matrix2d::Identity();
  std::vector<GaussianComponent> comps = {
      {Eigen::Vector2d(separation, 0.0), cov},
      {Eigen::Vector2d(0.0, separation), cov},
      {Eigen::Vector2d(-separation, 0.0), cov},
      {Eigen::Vector2d(0.0, -separation), cov},
  };
  return MixturePrior(std::move(comps), {0.25, 0.25, 0.25, 0.25});
}

namespace {

int draw_component(const std::vector<double>& weights, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return static_cast<int>(k);
  }
  // Rounding left u above the last partial sum; take the last positive weight.
  for (std::size_t k = weights.size(); k-- > 0;) {
    if (weights[k] > 0.0) return static_cast<int>(k);
  }
  return 0;
}

}  // namespace

Matrix sample_components(const MixturePrior& prior, const Labels& ids, Rng& rng) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), 2);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int k = ids[i];
    if (k < 0 || static_cast<std::size_t>(k) >= prior.size()) {
      throw ContractError("sample_components: unknown component " + std::to_string(k));
    }
    const double a = rng.normal();
    const double b = rng.normal();
    const Eigen::Vector2d v =
        prior.components()[static_cast<std::size_t>(k)].mean +
        prior.factor(static_cast<std::size_t>(k)) * Eigen::Vector2d(a, b);
    out.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return out;
}

PriorSample sample(const MixturePrior& prior, std::size_t n, Rng& rng) {
  PriorSample s;
  s.component.resize(n);
  for (auto& c : s.component) c = draw_component(prior.weights(), rng);
  s.values = sample_components(prior, s.component, rng);
  return s;
}

PriorSample sample(const NormalPrior& prior, std::size_t n, Rng& rng) {
  PriorSample s;
  s.values.resize(static_cast<Eigen::Index>(n), prior.dim);
  for (Eigen::Index k = 0; k < s.values.size(); ++k) s.values.data()[k] = rng.normal();
  return s;
}

PriorSample sample(const Prior& prior, std::size_t n, Rng& rng) {
  return std::visit([&](const auto& p) { return sample(p, n, rng); }, prior);
}

PriorSample sample(const Prior& prior, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample(prior, n, rng);
}

OneHotBatch one_hot(const LabelSource& source, std::size_t n, Rng& rng) {
  if (source.num_classes < 1) throw ConfigError("LabelSource: num_classes must be >= 1");
  OneHotBatch b;
  b.ids.resize(n);
  for (auto& id : b.ids) id = static_cast<int>(rng.below(static_cast<std::uint64_t>(source.num_classes)));
  b.rows = one_hot_rows(b.ids, source.num_classes);
  return b;
}

OneHotBatch one_hot(const LabelSource& source, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return one_hot(source, n, rng);
}

}  // namespace emogan
