#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "emogan/linalg.hpp"
#include "emogan/mlp.hpp"
#include "emogan/optimizer.hpp"
#include "emogan/priors.hpp"

namespace emogan {

enum class ToyVariant { vanilla, info };

std::string_view to_string(ToyVariant v);

// 2-D GAN used to contrast the plain objective with the mutual-information
// regularized one. Generator input is 2-D noise (plus a 4-way one-hot code
// for the info variant); the discriminator trunk is shared with the
// auxiliary class head.
struct ToyGan {
  ToyVariant variant = ToyVariant::vanilla;
  Mlp generator;
  Mlp trunk;
  Mlp head;
  std::optional<Mlp> aux;
  NormalPrior source{2};
  MixturePrior target = orthogonal_mixture();
};

struct ToyGanConfig {
  std::size_t epochs = 90;
  std::size_t batches_per_epoch = 25;
  std::size_t batch_size = 64;
  int hidden = 128;
  SgdConfig generator{0.05, 0.5};
  SgdConfig discriminator{0.05, 0.5};
  double info_weight = 1.0;
  std::size_t output_samples = 2000;
};

ToyGan make_toy_gan(ToyVariant variant, const MixturePrior& target, int hidden,
                    std::uint64_t seed);

struct ToyEpochLoss {
  double discriminator = 0.0;
  double generator = 0.0;
  double info = 0.0;
};

struct ToyResult {
  ToyVariant variant = ToyVariant::vanilla;
  Matrix source;       // noise fed to the trained generator
  Matrix target;       // draws from the target mixture
  Labels target_modes;
  Matrix generated;
  Labels conditioning;  // info variant: code fed with each sample
  std::vector<ToyEpochLoss> losses;
};

// Trains a fresh toy GAN and samples it. Throws DivergenceError (with the
// epoch) on non-finite losses and ConfigError when epochs == 0.
ToyResult toy_train_and_sample(ToyVariant variant, const MixturePrior& target,
                               const ToyGanConfig& config, std::uint64_t seed);

// Index of the closest row of `modes` for every sample.
Labels nearest_modes(const Matrix& samples, const Matrix& modes);

struct PurityReport {
  double purity = 0.0;        // fraction agreeing with their label's majority mode
  bool bijective = false;     // majority modes are distinct across labels
  std::vector<int> mapping;   // label -> majority mode
};

PurityReport cluster_purity(const Matrix& samples, const Labels& labels, const Matrix& modes,
                            int num_labels = 4);

// Number of modes that are nearest for at least `min_fraction` of samples.
int mode_coverage(const Matrix& samples, const Matrix& modes, double min_fraction = 0.05);

}  // namespace emogan
