#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "emogan/datasets.hpp"
#include "emogan/linalg.hpp"
#include "emogan/mlp.hpp"

namespace emogan {

inline constexpr double kChanceLevel = 0.25;

// Mean over the classes present in `labels` of per-class recall.
double uwa(const Labels& predictions, const Labels& labels);

// One-vs-rest linear classifier; prediction is the argmax of the class
// scores, lowest class index on ties.
struct MarginClassifier {
  Matrix weights;  // classes x dim
  Vector bias;     // classes
  double regularization = 0.0;
  std::vector<double> objective_trace;                 // refit objective per iteration
  std::vector<std::pair<double, double>> selection;    // (regularization, held-out UWA)

  Matrix scores(const Matrix& x) const;
  Labels predict(const Matrix& x) const;
};

struct SvmOptions {
  std::vector<double> grid = {0.001, 0.01, 0.1, 1.0, 10.0};
  std::size_t iterations = 300;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Hinge loss + L2 per class, minimized by deterministic full-batch
// subgradient descent (Pegasos step 1/(lambda t), ball projection, best
// iterate kept). The regularization weight is chosen on an internal
// holdout whose membership is a hash of each row's content, then the
// winner is refit on all rows.
MarginClassifier svm_train(const Matrix& x, const Labels& y, const SvmOptions& options = {});

// Metric 1: classifier trained on real data, UWA on synthetic data.
// Features are standardized with statistics of the classifier's training set.
double metric1(const Corpus& real_train, const Matrix& synthetic, const Labels& synthetic_labels,
               const SvmOptions& options = {});

// Metric 2: classifier trained on synthetic data, UWA on real data. A
// single-class synthetic set is reported as mode collapse (DegenerateDataError).
double metric2(const Matrix& synthetic, const Labels& synthetic_labels, const Corpus& real_test,
               const SvmOptions& options = {});

inline constexpr int kEvaluatorWidth = 64;
inline constexpr std::size_t kEvaluatorTapLayer = 2;  // third hidden layer

// input -> 64 -> 64 -> 64 -> 64 -> 4, ReLU hidden, softmax output.
struct EvaluatorNet {
  Mlp net;
  std::vector<std::string> warnings;

  Labels predict(const Matrix& features) const;
};

struct EvaluatorOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

EvaluatorNet make_evaluator(int input_dim, std::uint64_t seed);

// Softmax cross-entropy training on a labeled set; weights are frozen
// (returned by value, never touched again).
EvaluatorNet evaluator_train(const Matrix& features, const Labels& labels,
                             const EvaluatorOptions& options = {});

// Third-hidden-layer (post-ReLU) outputs, one 64-d row per sample.
Matrix activations(const EvaluatorNet& evaluator, const Matrix& features);

struct GaussianStats {
  Vector mean;
  Matrix covariance;  // unbiased (n - 1)
  std::size_t count = 0;

  nlohmann::json to_json() const;
};

GaussianStats gaussian_stats(const Matrix& samples);

// Frechet distance between two Gaussians. tr sqrt(S_x^{1/2} S_g S_x^{1/2}) is
// the sum of singular values of S_g^{1/2} S_x^{1/2}; both roots come from
// symmetric eigendecompositions.
double fid(const GaussianStats& x, const GaussianStats& g);

inline constexpr std::size_t kMinFidSamples = 65;

// activations -> statistics -> fid. Labels play no part.
double fid_pipeline(const EvaluatorNet& evaluator, const Matrix& real, const Matrix& synthetic);

// Table of metric values keyed by (model, fold). Missing cells are NaN.
struct MetricsReport {
  std::vector<std::string> columns;
  struct Row {
    std::string model;
    std::string fold;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  double chance_level = kChanceLevel;

  void add(std::string model, std::string fold, std::vector<double> values);
  // Appends one "mean" row per model (in first-seen order), NaN-aware.
  void add_means();
  std::optional<double> value(const std::string& model, const std::string& fold,
                              const std::string& column) const;

  std::string to_csv() const;
  // Accuracies as percentages with two decimals, FID with two decimals.
  std::string to_table() const;
};

}  // namespace emogan
