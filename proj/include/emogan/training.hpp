#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emogan/datasets.hpp"
#include "emogan/models.hpp"
#include "emogan/optimizer.hpp"

namespace emogan {

// Per-step optimizer settings and the batch schedule for one training run.
struct TrainPlan {
  SgdConfig step1_autoencoder;
  SgdConfig step2_d1;
  SgdConfig step3_encoder;
  SgdConfig step4_d2;
  SgdConfig step5_generator;
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  int d2_gen_ratio = 2;  // step5 passes per step4 pass
  double info_weight = 1.0;  // lambda on the Q term (M3)
  std::uint64_t seed = 0;

  // Reference rates: AE 0.001 (momentum 0.9 for M1/M2, none for M3), D1 and
  // encoder 0.1 (M1/M2) or 0.01 (M3), D2 0.0001, generator 0.001.
  static TrainPlan defaults(ModelKind kind);

  void validate() const;
};

inline constexpr double kDivergenceThreshold = 1e6;

// Losses of one evaluation pass. Entries that do not apply to the model
// kind stay empty.
struct LossSet {
  double reconstruction = 0.0;
  double d1 = 0.0;
  double encoder = 0.0;
  std::optional<double> d2;
  std::optional<double> generator;
  std::optional<double> info;  // Q term, M3 only
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossSet train;
  LossSet validation;
};

struct LossHistory {
  std::vector<EpochRecord> records;

  // Columns: epoch,split,loss_name,value
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  bool all_finite() const;
};

struct StepCounters {
  std::size_t step1 = 0;
  std::size_t step2 = 0;
  std::size_t step3 = 0;
  std::size_t step4 = 0;
  std::size_t step5 = 0;
};

struct GeneratorLoss {
  double adversarial = 0.0;
  double info = 0.0;  // zero for M2
  double total() const { return adversarial + info; }
};

// Runs the five update steps against one model. Each step touches only the
// components it names; frozen components keep parameters and momentum.
class Trainer {
 public:
  Trainer(GanModel& model, TrainPlan plan);

  // Step 1: encoder + decoder on reconstruction MSE. Returns pre-update loss.
  double step1_autoencoder(const Matrix& batch);

  // Step 2: D1 on (encoder codes, c_x) -> 1 and prior codes -> 0. Counts
  // must match. Returns the two-term BCE before the update.
  double step2_d1(const Matrix& real, const Labels& labels, const PriorCodes& prior);
  double step2_d1(const Matrix& real, const Labels& labels);

  // Step 3: encoder drives D1 toward 0 on its codes; D1 frozen.
  double step3_encoder(const Matrix& real, const Labels& labels);

  // Step 4: D2 on decoder outputs -> 1 and real features -> 0.
  double step4_d2(const Matrix& real, const Labels& labels, std::size_t n_synthetic);

  // Step 5: decoder (and code generator, M3) drive D2 toward 0; for M3 the
  // Q term also updates them and the auxiliary head. D2 trunk frozen.
  GeneratorLoss step5_generator(std::size_t n);

  // Losses on a split without touching any parameter.
  LossSet evaluate(const Corpus& split, std::uint64_t seed) const;

  // Full schedule over `train`, recording both splits after every epoch.
  LossHistory train(const Corpus& train, const Corpus& validation);

  const StepCounters& counters() const { return counters_; }
  const TrainPlan& plan() const { return plan_; }
  GanModel& model() { return model_; }

 private:
  void check_loss(double value, const char* step) const;
  Matrix synthesize(std::size_t n, Rng& rng, Labels& labels, Matrix& one_hot,
                    Matrix* generator_input) const;

  GanModel& model_;
  TrainPlan plan_;
  Rng rng_;
  StepCounters counters_;
  std::size_t epoch_ = 0;
};

struct TrainResult {
  LossHistory history;
  StepCounters counters;
};

TrainResult train(GanModel& model, const Corpus& train, const Corpus& validation,
                  const TrainPlan& plan);

}  // namespace emogan
