#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "emogan/linalg.hpp"
#include "emogan/mlp.hpp"
#include "emogan/priors.hpp"
#include "emogan/rng.hpp"

namespace emogan {

inline constexpr int kNumClasses = 4;
inline constexpr int kReferenceFeatureDim = 1582;

enum class ModelKind { m1, m2, m3 };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

// Hidden-width multiplier applied to the reference architecture. Widths are
// max(8, round(width * ratio)); ratio 1 reproduces the reference sizes.
struct ScaleProfile {
  double width_ratio = 1.0;

  static ScaleProfile full() { return {1.0}; }
  static ScaleProfile proportional(int feature_dim) {
    return {static_cast<double>(feature_dim) / kReferenceFeatureDim};
  }
  static ScaleProfile quarter() { return {0.25}; }

  int width(int reference_width) const;
};

struct PriorSettings {
  double separation = 3.0;  // mixture prior, M1/M2
  double stddev = 0.5;
  int noise_dim = 20;       // normal prior, M3
};

// One of the three generator systems. M1 fills encoder/decoder/d1; M2 adds
// the data discriminator (shared trunk + sigmoid head); M3 adds the code
// generator and the auxiliary class head on the same trunk.
struct GanModel {
  ModelKind kind = ModelKind::m1;
  int feature_dim = 0;
  int code_dim = 0;
  ScaleProfile profile;
  PriorSettings prior_settings;
  Prior prior = NormalPrior(20);
  std::uint64_t seed = 0;

  Mlp encoder;
  Mlp decoder;
  Mlp d1;
  std::optional<Mlp> d2_trunk;
  std::optional<Mlp> d2_head;
  std::optional<Mlp> aux_head;
  std::optional<Mlp> code_generator;

  bool has_data_discriminator() const { return d2_trunk.has_value(); }
  const MixturePrior& mixture() const;    // M1/M2 only
  const NormalPrior& noise_prior() const;  // M3 only
};

GanModel build(ModelKind kind, int feature_dim, ScaleProfile profile, std::uint64_t seed,
               const PriorSettings& prior = {});

Matrix encode(const GanModel& model, const Matrix& features);
Matrix decode(const GanModel& model, const Matrix& codes);

struct SyntheticBatch {
  Matrix features;
  Labels labels;
};

// Samples the prior (the requested mixture component, or the code generator
// fed with the requested one-hot class for M3) and decodes it.
SyntheticBatch generate(const GanModel& model, std::size_t n, std::optional<int> cls, Rng& rng);
SyntheticBatch generate(const GanModel& model, std::size_t n, std::optional<int> cls,
                        std::uint64_t seed);

// Prior-side codes with their one-hot labels, as consumed by D1. For M3 this
// runs the code generator on [noise | one-hot].
struct PriorCodes {
  Matrix codes;
  Matrix one_hot;
  Labels ids;
  Matrix generator_input;  // M3 only
};
PriorCodes sample_prior_codes(const GanModel& model, std::size_t n, std::optional<int> cls,
                              Rng& rng);

// D1 output: probability that (code, label) came from the encoder.
Vector discriminate_code(const GanModel& model, const Matrix& code, const Matrix& one_hot);

struct DataVerdict {
  Vector probability;          // probability the input is a decoder output
  std::optional<Matrix> aux;   // M3: class posterior q(c | x)
};

// The auxiliary head sees the trunk with the label slot zeroed: it must
// infer the class from the features alone.
DataVerdict discriminate_data(const GanModel& model, const Matrix& features,
                              const Matrix& one_hot);

// Trunk input for the auxiliary head: [features | 0].
Matrix aux_input(const Matrix& features);

// Model bundle: "EMGB" magic, version byte, JSON header (kind, dims, prior,
// profile, seed, component names), then one network container per component.
void save_model(const std::filesystem::path& path, const GanModel& model,
                const nlohmann::json& extra = nlohmann::json::object());
GanModel load_model(const std::filesystem::path& path, nlohmann::json* extra = nullptr);

// Combined checksum over every component's parameters.
std::uint64_t model_checksum(const GanModel& model);

}  // namespace emogan
