#include "emogan/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "emogan/errors.hpp"
#include "emogan/losses.hpp"
#include "emogan/optimizer.hpp"
#include "emogan/rng.hpp"

namespace emogan {

double uwa(const Labels& predictions, const Labels& labels) {
  if (labels.empty()) throw ContractError("uwa: empty input");
  if (predictions.size() != labels.size()) {
    throw ContractError("uwa: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
  }
  int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<std::size_t> total(static_cast<std::size_t>(max_label) + 1, 0);
  std::vector<std::size_t> hit(total.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw ContractError("uwa: negative label");
    const auto k = static_cast<std::size_t>(labels[i]);
    ++total[k];
    if (predictions[i] == labels[i]) ++hit[k];
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < total.size(); ++k) {
    if (total[k] == 0) continue;
    sum += static_cast<double>(hit[k]) / static_cast<double>(total[k]);
    ++present;
  }
  return sum / present;
}

Matrix MarginClassifier::scores(const Matrix& x) const {
  if (x.cols() != weights.cols()) {
    throw ShapeError("MarginClassifier: expected " + std::to_string(weights.cols()) +
                     " features, got " + std::to_string(x.cols()));
  }
  Matrix s = x * weights.transpose();
  s.rowwise() += bias.transpose();
  return s;
}

Labels MarginClassifier::predict(const Matrix& x) const {
  const Matrix s = scores(x);
  Labels out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < s.cols(); ++k) {
      if (s(i, k) > s(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

namespace {

constexpr int kClasses = 4;

struct LinearFit {
  Matrix w;  // classes x (dim + 1), last column is the bias
  std::vector<double> trace;
};

LinearFit fit_hinge(const Matrix& x, const Labels& y, double lambda, std::size_t iterations) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols() + 1;
  Matrix xa(n, d);
  xa << x, Matrix::Ones(n, 1);
  Matrix signs = Matrix::Constant(n, kClasses, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) signs(i, y[static_cast<std::size_t>(i)]) = 1.0;

  const double radius = 1.0 / std::sqrt(lambda);
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix w = Matrix::Zero(kClasses, d);
  Matrix best = w;
  Vector best_obj = Vector::Constant(kClasses, std::numeric_limits<double>::infinity());
  LinearFit fit;

  auto objective_and_subgradient = [&](Matrix& sub) {
    const Matrix margins = (xa * w.transpose()).cwiseProduct(signs);
    Vector obj(kClasses);
    Matrix active = Matrix::Zero(n, kClasses);
    for (int k = 0; k < kClasses; ++k) {
      double hinge = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double slack = 1.0 - margins(i, k);
        if (slack > 0.0) {
          hinge += slack;
          active(i, k) = signs(i, k);
        }
      }
      obj(k) = 0.5 * lambda * w.row(k).squaredNorm() + hinge * inv_n;
    }
    sub = inv_n * active.transpose() * xa;
    return obj;
  };

  Matrix sub;
  for (std::size_t t = 1; t <= iterations + 1; ++t) {
    const Vector obj = objective_and_subgradient(sub);
    fit.trace.push_back(obj.sum());
    for (int k = 0; k < kClasses; ++k) {
      if (obj(k) < best_obj(k)) {
        best_obj(k) = obj(k);
        best.row(k) = w.row(k);
      }
    }
    if (t == iterations + 1) break;
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    w = (1.0 - eta * lambda) * w + eta * sub;
    for (int k = 0; k < kClasses; ++k) {
      const double norm = w.row(k).norm();
      if (norm > radius) w.row(k) *= radius / norm;
    }
  }
  fit.w = best;
  return fit;
}

MarginClassifier to_classifier(const LinearFit& fit, double lambda) {
  MarginClassifier c;
  c.weights = fit.w.leftCols(fit.w.cols() - 1);
  c.bias = fit.w.col(fit.w.cols() - 1);
  c.regularization = lambda;
  c.objective_trace = fit.trace;
  return c;
}

bool in_holdout(const Matrix& x, Eigen::Index row, int label, double fraction,
                std::uint64_t seed) {
  std::uint64_t h = fnv1a(&seed, sizeof seed);
  const RowVector r = x.row(row);
  h = fnv1a(r.data(), sizeof(double) * static_cast<std::size_t>(r.size()), h);
  h = fnv1a(&label, sizeof label, h);
  return static_cast<double>(h >> 11) * 0x1.0p-53 < fraction;
}

std::size_t distinct_count(const Labels& y) { return std::set<int>(y.begin(), y.end()).size(); }

}  // namespace

MarginClassifier svm_train(const Matrix& x, const Labels& y, const SvmOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ShapeError("svm_train: " + std::to_string(x.rows()) + " rows for " +
                     std::to_string(y.size()) + " labels");
  }
  for (int label : y) {
    if (label < 0 || label >= kClasses) throw ContractError("svm_train: label out of range");
  }
  if (distinct_count(y) < 2) {
    throw DegenerateDataError("svm_train: training data covers fewer than two classes");
  }
  if (options.grid.empty()) throw ConfigError("svm_train: empty regularization grid");
  for (double g : options.grid) {
    if (!(g > 0.0)) throw ConfigError("svm_train: regularization weights must be positive");
  }

  std::vector<std::size_t> fit_rows, hold_rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    (in_holdout(x, i, y[static_cast<std::size_t>(i)], options.holdout_fraction, options.seed)
         ? hold_rows
         : fit_rows)
        .push_back(static_cast<std::size_t>(i));
  }
  Labels fit_y, hold_y;
  for (std::size_t i : fit_rows) fit_y.push_back(y[i]);
  for (std::size_t i : hold_rows) hold_y.push_back(y[i]);

  std::vector<std::pair<double, double>> selection;
  double chosen = options.grid[options.grid.size() / 2];
  if (!hold_rows.empty() && distinct_count(fit_y) >= 2) {
    const Matrix fit_x = take_rows(x, fit_rows);
    const Matrix hold_x = take_rows(x, hold_rows);
    double best = -1.0;
    for (double lambda : options.grid) {
      const MarginClassifier c = to_classifier(fit_hinge(fit_x, fit_y, lambda, options.iterations),
                                               lambda);
      const double score = uwa(c.predict(hold_x), hold_y);
      selection.emplace_back(lambda, score);
      if (score > best) {
        best = score;
        chosen = lambda;
      }
    }
  }
  MarginClassifier c = to_classifier(fit_hinge(x, y, chosen, options.iterations), chosen);
  c.selection = std::move(selection);
  return c;
}

double metric1(const Corpus& real_train, const Matrix& synthetic, const Labels& synthetic_labels,
               const SvmOptions& options) {
  if (real_train.size() == 0 || synthetic.rows() == 0) {
    throw DegenerateDataError("metric1: empty input set");
  }
  const Standardizer s = Standardizer::fit(real_train.features);
  const MarginClassifier c = svm_train(s.apply(real_train.features), real_train.labels, options);
  return uwa(c.predict(s.apply(synthetic)), synthetic_labels);
}

double metric2(const Matrix& synthetic, const Labels& synthetic_labels, const Corpus& real_test,
               const SvmOptions& options) {
  if (real_test.size() == 0 || synthetic.rows() == 0) {
    throw DegenerateDataError("metric2: empty input set");
  }
  if (distinct_count(synthetic_labels) < 2) {
    throw DegenerateDataError("metric2: synthetic set covers a single class (mode collapse)");
  }
  const Standardizer s = Standardizer::fit(synthetic);
  const MarginClassifier c = svm_train(s.apply(synthetic), synthetic_labels, options);
  return uwa(c.predict(s.apply(real_test.features)), real_test.labels);
}

Labels EvaluatorNet::predict(const Matrix& features) const {
  const Matrix p = net.predict(features);
  Labels out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index k = 0;
    p.row(i).maxCoeff(&k);
    out[static_cast<std::size_t>(i)] = static_cast<int>(k);
  }
  return out;
}

EvaluatorNet make_evaluator(int input_dim, std::uint64_t seed) {
  constexpr auto R = Activation::relu;
  Rng rng(derive_seed(seed, "evaluator"));
  EvaluatorNet e;
  e.net = Mlp({input_dim, kEvaluatorWidth, kEvaluatorWidth, kEvaluatorWidth, kEvaluatorWidth,
               kClasses},
              {R, R, R, R, Activation::softmax}, rng);
  return e;
}

EvaluatorNet evaluator_train(const Matrix& features, const Labels& labels,
                             const EvaluatorOptions& options) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("evaluator_train: row/label count mismatch");
  }
  if (features.rows() == 0) throw DegenerateDataError("evaluator_train: empty corpus");
  if (options.batch_size == 0) throw ConfigError("evaluator_train: batch size must be positive");
  const SgdConfig sgd{options.learning_rate, options.momentum};
  sgd.validate();
  EvaluatorNet e = make_evaluator(static_cast<int>(features.cols()), options.seed);
  if (options.epochs == 0) {
    e.warnings.push_back("evaluator trained for 0 epochs; weights are at initialization");
    return e;
  }
  const Matrix targets = one_hot_rows(labels, kClasses);
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    Rng shuffler(derive_seed(options.seed, "evaluator-batches", epoch));
    shuffler.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
      const ForwardCache cache = e.net.forward(take_rows(features, idx));
      const LossResult loss = loss_categorical(cache.output(), take_rows(targets, idx));
      if (!std::isfinite(loss.value) || loss.value > 1e6) {
        throw DivergenceError("evaluator_train diverged at epoch " + std::to_string(epoch));
      }
      sgd_step(e.net, e.net.backward(cache, loss.gradient), sgd);
    }
  }
  e.net.reset_momentum();
  return e;
}

Matrix activations(const EvaluatorNet& evaluator, const Matrix& features) {
  if (features.cols() != evaluator.net.input_dim()) {
    throw ShapeError("activations: evaluator expects " +
                     std::to_string(evaluator.net.input_dim()) + " features, got " +
                     std::to_string(features.cols()));
  }
  return evaluator.net.forward(features).outputs.at(kEvaluatorTapLayer);
}

nlohmann::json GaussianStats::to_json() const {
  nlohmann::json j;
  j["count"] = count;
  j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < covariance.rows(); ++r) {
    const RowVector row = covariance.row(r);
    rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["covariance"] = rows;
  return j;
}

GaussianStats gaussian_stats(const Matrix& samples) {
  if (samples.rows() < 2) {
    throw DegenerateDataError("gaussian_stats: need at least 2 samples, got " +
                              std::to_string(samples.rows()));
  }
  GaussianStats s;
  s.count = static_cast<std::size_t>(samples.rows());
  s.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  // Exact symmetry; the product above is symmetric up to rounding.
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  return s;
}

namespace {

constexpr double kPsdFloor = -1e-8;
constexpr double kEigenClamp = 1e-10;

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, const char* which) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) {
    throw NumericalDomainError(std::string("fid: eigendecomposition failed for ") + which);
  }
  if (eig.eigenvalues().minCoeff() < kPsdFloor) {
    throw NumericalDomainError(std::string("fid: covariance ") + which +
                               " is not positive semidefinite (eigenvalue " +
                               std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }
  const Eigen::VectorXd root = eig.eigenvalues().unaryExpr(
      [](double v) { return v < kEigenClamp ? 0.0 : std::sqrt(v); });
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double fid(const GaussianStats& x, const GaussianStats& g) {
  if (x.mean.size() != g.mean.size() || x.covariance.rows() != g.covariance.rows() ||
      x.covariance.rows() != x.mean.size() || g.covariance.cols() != g.mean.size()) {
    throw ShapeError("fid: statistics have mismatched dimensions");
  }
  const Eigen::MatrixXd sx = x.covariance;
  const Eigen::MatrixXd sg = g.covariance;
  const Eigen::MatrixXd root_x = symmetric_sqrt(sx, "x");
  const Eigen::MatrixXd root_g = symmetric_sqrt(sg, "g");

  // Singular values of root_g * root_x are the square roots of the
  // eigenvalues of root_x * sg * root_x, without squaring small ones.
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(root_g * root_x);
  if (svd.info() != Eigen::Success) throw NumericalDomainError("fid: singular value decomposition failed");
  const double trace_sqrt = svd.singularValues().sum();
  const double value =
      (x.mean - g.mean).squaredNorm() + sx.trace() + sg.trace() - 2.0 * trace_sqrt;
  return std::max(0.0, value);
}

double fid_pipeline(const EvaluatorNet& evaluator, const Matrix& real, const Matrix& synthetic) {
  if (static_cast<std::size_t>(real.rows()) < kMinFidSamples ||
      static_cast<std::size_t>(synthetic.rows()) < kMinFidSamples) {
    throw DegenerateDataError("fid_pipeline: both sets need at least " +
                              std::to_string(kMinFidSamples) + " samples (got " +
                              std::to_string(real.rows()) + " and " +
                              std::to_string(synthetic.rows()) + ")");
  }
  return fid(gaussian_stats(activations(evaluator, real)),
             gaussian_stats(activations(evaluator, synthetic)));
}

void MetricsReport::add(std::string model, std::string fold, std::vector<double> values) {
  if (values.size() != columns.size()) {
    throw ContractError("MetricsReport: row has " + std::to_string(values.size()) +
                        " values for " + std::to_string(columns.size()) + " columns");
  }
  rows.push_back({std::move(model), std::move(fold), std::move(values)});
}

void MetricsReport::add_means() {
  std::vector<std::string> models;
  for (const auto& r : rows) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
  }
  for (const auto& m : models) {
    std::vector<double> sum(columns.size(), 0.0);
    std::vector<int> count(columns.size(), 0);
    for (const auto& r : rows) {
      if (r.model != m || r.fold == "mean") continue;
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (std::isnan(r.values[c])) continue;
        sum[c] += r.values[c];
        ++count[c];
      }
    }
    std::vector<double> mean(columns.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (count[c] > 0) mean[c] = sum[c] / count[c];
    }
    rows.push_back({m, "mean", std::move(mean)});
  }
}

std::optional<double> MetricsReport::value(const std::string& model, const std::string& fold,
                                           const std::string& column) const {
  const auto col = std::find(columns.begin(), columns.end(), column);
  if (col == columns.end()) return std::nullopt;
  const auto c = static_cast<std::size_t>(col - columns.begin());
  for (const auto& r : rows) {
    if (r.model == model && r.fold == fold && !std::isnan(r.values[c])) return r.values[c];
  }
  return std::nullopt;
}

namespace {

std::string shortest(double v) {
  if (std::isnan(v)) return "";
  return format_double(v);
}

}  // namespace

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "model,fold";
  for (const auto& c : columns) os << ',' << c;
  os << '\n';
  for (const auto& r : rows) {
    os << r.model << ',' << r.fold;
    for (double v : r.values) os << ',' << shortest(v);
    os << '\n';
  }
  return os.str();
}

std::string MetricsReport::to_table() const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head = {"model", "fold"};
  for (const auto& c : columns) {
    head.push_back(c.rfind("fid", 0) == 0 ? c : c + " (%)");
  }
  cells.push_back(head);
  for (const auto& r : rows) {
    std::vector<std::string> line = {r.model, r.fold};
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const double v = r.values[c];
      std::ostringstream f;
      if (std::isnan(v)) {
        f << "-";
      } else if (columns[c].rfind("fid", 0) == 0) {
        f << std::fixed << std::setprecision(2) << v;
      } else {
        f << std::fixed << std::setprecision(2) << 100.0 * v;
      }
      line.push_back(f.str());
    }
    cells.push_back(line);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream os;
  for (std::size_t li = 0; li < cells.size(); ++li) {
    for (std::size_t c = 0; c < cells[li].size(); ++c) {
      if (c > 0) os << "  ";
      os << std::setw(static_cast<int>(width[c])) << (c < 2 ? std::left : std::right)
         << cells[li][c];
    }
    os << '\n';
    if (li == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  os << "chance level: " << std::fixed << std::setprecision(2) << 100.0 * chance_level << "%\n";
  return os.str();
}

}  // namespace emogan
