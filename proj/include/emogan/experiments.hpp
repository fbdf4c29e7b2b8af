#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "emogan/datasets.hpp"
#include "emogan/metrics.hpp"
#include "emogan/models.hpp"
#include "emogan/toy_gan.hpp"
#include "emogan/training.hpp"

namespace emogan {

enum class ExperimentKind { toy_compare, cv_indomain, cross_corpus, low_resource };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

// Where a corpus comes from: a feature CSV, or a generated toy corpus.
struct CorpusSource {
  std::optional<std::filesystem::path> path;
  CsvOptions csv;
  ToyCorpusSpec toy;
};

// Optional per-step overrides of the reference TrainPlan.
struct StepOverride {
  std::optional<double> learning_rate;
  std::optional<double> momentum;
};

struct TrainSettings {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  int d2_gen_ratio = 2;
  double info_weight = 1.0;
  std::array<StepOverride, 5> steps;

  TrainPlan plan_for(ModelKind kind, std::uint64_t seed) const;
};

// Everything an experiment needs. Every field has a default, so an empty
// config file describes the reference toy setting.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::toy_compare;
  std::uint64_t seed = 2024;
  std::filesystem::path out = "emogan-out";
  std::vector<ModelKind> models = {ModelKind::m1, ModelKind::m2, ModelKind::m3};

  CorpusSource corpus;  // in-domain corpus, or the source corpus
  CorpusSource target;  // cross-corpus / low-resource target

  std::string profile = "proportional";  // proportional | full | quarter | <ratio>
  PriorSettings prior;
  TrainSettings train;

  std::vector<std::string> metrics = {"metric1", "metric2", "fid"};
  std::size_t svm_iterations = 300;
  EvaluatorOptions evaluator;
  std::size_t n_synth = 0;      // 0: as many as the training split
  std::size_t max_folds = 0;    // 0: all folds
  bool standardize = true;

  std::size_t toy_seeds = 10;
  ToyGanConfig toy;
  double toy_separation = 3.0;  // target mixture of the toy study
  double toy_stddev = 0.5;

  std::vector<double> p_grid = {10, 25, 50, 80, 100};
  std::vector<std::size_t> n_grid = {0, 600, 2000, 6000};
  // Directory holding model_<kind>.emgb bundles to reuse instead of training.
  std::optional<std::filesystem::path> checkpoints;

  ScaleProfile scale_for(int feature_dim) const;
  bool wants(std::string_view metric) const;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

ExperimentConfig default_config(ExperimentKind kind);

// Text format: "[section]" headers, "key = value" lines, '#' comments.
// Lists are comma separated. See README for the full key list.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
std::string to_text(const ExperimentConfig& config);

// One stage of a run: name, derived seed, wall-clock seconds.
struct StageRecord {
  std::string name;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

struct OutputRecord {
  std::string file;
  std::uintmax_t bytes = 0;
  std::string fnv1a;
};

struct RunManifest {
  std::string artifact_version;
  std::string config_text;
  std::uint64_t master_seed = 0;
  std::vector<StageRecord> stages;
  std::vector<OutputRecord> outputs;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

std::string file_hash(const std::filesystem::path& path);

struct ToyCompareResult {
  struct SeedOutcome {
    std::uint64_t seed = 0;
    int vanilla_coverage = 0;
    PurityReport info;
  };
  std::vector<SeedOutcome> seeds;
  int vanilla_passes = 0;  // coverage >= 3
  int info_passes = 0;     // purity >= 0.95 and bijective
  RunManifest manifest;
};

struct FoldModelRun {
  ModelKind model = ModelKind::m1;
  std::size_t fold = 0;
  LossHistory history;
  StepCounters counters;
};

struct CvResult {
  MetricsReport report;
  std::vector<int> code_classes_nearest;  // per fold, M1 only
  std::vector<FoldModelRun> runs;
  RunManifest manifest;
};

struct CrossCorpusResult {
  MetricsReport report;
  RunManifest manifest;
};

struct LowResourceCell {
  std::string model;
  double p = 0.0;
  std::size_t n_synth = 0;
  double uwa = 0.0;
};

struct LowResourceResult {
  std::vector<LowResourceCell> cells;
  RunManifest manifest;

  std::optional<double> value(const std::string& model, double p, std::size_t n) const;
};

ToyCompareResult run_toy_compare(const ExperimentConfig& config);
CvResult run_cv_indomain(const ExperimentConfig& config);
CrossCorpusResult run_cross_corpus(const ExperimentConfig& config);
LowResourceResult run_low_resource(const ExperimentConfig& config);

// Dispatches on config.kind; returns the manifest written to out/manifest.json.
RunManifest run_experiment(const ExperimentConfig& config);

// Class-wise mean M1 code, and how many classes sit nearest their own
// prior mode.
int classes_nearest_own_mode(const GanModel& m1, const Matrix& features, const Labels& labels);

}  // namespace emogan
