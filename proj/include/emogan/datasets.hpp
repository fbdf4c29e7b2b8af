#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emogan/linalg.hpp"

namespace emogan {

// Fixed label order used everywhere: angry, sad, neutral, happy -> 0..3.
inline constexpr std::array<std::string_view, 4> kEmotionNames = {"angry", "sad", "neutral",
                                                                   "happy"};

int emotion_id(std::string_view name);  // throws ParseError on unknown names
std::string_view emotion_name(int id);

using ClassHistogram = std::array<std::size_t, 4>;

struct Corpus {
  std::string name;
  Matrix features;
  Labels labels;
  std::vector<std::string> sessions;  // empty, or one tag per sample
  std::vector<std::string> feature_names;

  std::size_t size() const { return labels.size(); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  bool has_sessions() const { return !sessions.empty(); }
  ClassHistogram histogram() const;

  // Rows `index` in order; sessions and names carried along.
  Corpus subset(const std::vector<std::size_t>& index) const;

  // Throws ContractError if the invariants (uniform dims, labels 0..3,
  // session tags per sample, finite features) fail.
  void validate() const;
};

ClassHistogram histogram(const Labels& labels);

struct CsvOptions {
  std::string label_column = "label";
  std::optional<std::string> session_column;  // nullopt: auto-detect "session"
};

// Header row required. Every column other than the label and session
// columns must be numeric. Errors name the 1-based line.
Corpus load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

// Writes feature columns, then "label" (emotion name), then "session" when
// present. Numbers use the shortest round-trip representation.
void save_csv(const Corpus& corpus, const std::filesystem::path& path);

struct ToyCorpusSpec {
  int feature_dim = 64;
  std::size_t per_class = 250;
  double class_mean_separation = 4.0;
  double noise_stddev = 1.0;
  std::uint64_t seed = 1;
  // Seed for the class-mean directions; two corpora sharing it share classes.
  std::optional<std::uint64_t> direction_seed;
  // Norm of a global offset added to every sample (corpus shift).
  double shift = 0.0;
  // Per-class counts overriding per_class (class imbalance).
  std::optional<std::array<std::size_t, 4>> class_counts;
  int sessions = 5;
  std::string name = "toy";
};

// Four isotropic Gaussian classes whose means lie along random orthonormal
// directions scaled by the separation. Sessions are assigned round-robin.
Corpus make_toy_corpus(const ToyCorpusSpec& spec);

enum class SplitMode { leave_one_session_out, ratio, explicit_sessions };

struct SplitPlan {
  SplitMode mode = SplitMode::leave_one_session_out;
  double train_ratio = 0.8;                      // ratio mode
  std::vector<std::string> validation_sessions;  // explicit mode
  std::uint64_t seed = 0;
};

struct Fold {
  Corpus train;
  Corpus validation;
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> validation_index;
};

// Leave-one-session-out yields one fold per distinct session (sorted by tag).
std::vector<Fold> split(const Corpus& corpus, const SplitPlan& plan);

// Downsamples every class to the minority-class count.
Corpus balance(const Corpus& corpus, std::uint64_t seed);

// Keeps round(fraction * class count) samples of every class (at least one
// per nonempty class).
Corpus stratified_subsample(const Corpus& corpus, double fraction, std::uint64_t seed);

class Standardizer {
 public:
  static constexpr double kStddevFloor = 1e-8;

  // Fit on a training split only.
  static Standardizer fit(const Corpus& train);
  static Standardizer fit(const Matrix& train);
  // Rebuilds a fitted transform from stored statistics.
  static Standardizer from_stats(RowVector mean, RowVector stddev);

  Matrix apply(const Matrix& features) const;
  Corpus apply(const Corpus& corpus) const;
  Matrix inverse(const Matrix& standardized) const;

  const RowVector& mean() const { return mean_; }
  const RowVector& stddev() const { return stddev_; }

 private:
  RowVector mean_;
  RowVector stddev_;
};

}  // namespace emogan
