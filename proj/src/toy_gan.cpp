#include "emogan/toy_gan.hpp"

#include <cmath>
#include <string>

#include "emogan/errors.hpp"
#include "emogan/losses.hpp"

namespace emogan {

std::string_view to_string(ToyVariant v) { return v == ToyVariant::info ? "info" : "vanilla"; }

namespace {

constexpr int kCodes = 4;

void accumulate(Gradients& into, const Gradients& g) {
  for (std::size_t i = 0; i < into.layers.size(); ++i) {
    into.layers[i].weight += g.layers[i].weight;
    into.layers[i].bias += g.layers[i].bias;
  }
}

}  // namespace

ToyGan make_toy_gan(ToyVariant variant, const MixturePrior& target, int hidden,
                    std::uint64_t seed) {
  constexpr auto R = Activation::relu;
  ToyGan gan;
  gan.variant = variant;
  gan.target = target;
  const int in = 2 + (variant == ToyVariant::info ? kCodes : 0);
  Rng g_rng(derive_seed(seed, "toy-generator"));
  Rng t_rng(derive_seed(seed, "toy-trunk"));
  Rng h_rng(derive_seed(seed, "toy-head"));
  gan.generator = Mlp({in, hidden, hidden, 2}, {R, R, Activation::linear}, g_rng);
  gan.trunk = Mlp({2, hidden, hidden}, {R, R}, t_rng);
  gan.head = Mlp({hidden, 1}, {Activation::sigmoid}, h_rng);
  if (variant == ToyVariant::info) {
    Rng a_rng(derive_seed(seed, "toy-aux"));
    gan.aux = Mlp({hidden, kCodes}, {Activation::softmax}, a_rng);
  }
  return gan;
}

ToyResult toy_train_and_sample(ToyVariant variant, const MixturePrior& target,
                               const ToyGanConfig& config, std::uint64_t seed) {
  if (config.epochs == 0) throw ConfigError("toy_train_and_sample: epochs must be >= 1");
  if (config.batch_size == 0 || config.batches_per_epoch == 0) {
    throw ConfigError("toy_train_and_sample: empty batches");
  }
  config.generator.validate();
  config.discriminator.validate();

  ToyGan gan = make_toy_gan(variant, target, config.hidden, seed);
  const bool info = variant == ToyVariant::info;
  const LabelSource codes{kCodes};
  Rng rng(derive_seed(seed, "toy-train"));
  const std::size_t n = config.batch_size;

  auto generator_input = [&](Rng& r, std::size_t count, Labels* ids, Matrix* oh) {
    Matrix z = sample(gan.source, count, r).values;
    if (!info) return z;
    OneHotBatch c = one_hot(codes, count, r);
    if (ids) *ids = c.ids;
    if (oh) *oh = c.rows;
    return hconcat(z, c.rows);
  };

  ToyResult result;
  result.variant = variant;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    ToyEpochLoss acc;
    try {
    for (std::size_t b = 0; b < config.batches_per_epoch; ++b) {
      // Discriminator (and Q) update.
      const Matrix real = sample(gan.target, n, rng).values;
      Matrix fake_oh;
      const Matrix fake = gan.generator.predict(generator_input(rng, n, nullptr, &fake_oh));

      const ForwardCache t_real = gan.trunk.forward(real);
      const ForwardCache h_real = gan.head.forward(t_real.output());
      const LossResult l_real = loss_bce(h_real.output(), 1.0);
      const ForwardCache t_fake = gan.trunk.forward(fake);
      const ForwardCache h_fake = gan.head.forward(t_fake.output());
      const LossResult l_fake = loss_bce(h_fake.output(), 0.0);

      const Gradients gh_real = gan.head.backward(h_real, l_real.gradient);
      const Gradients gh_fake = gan.head.backward(h_fake, l_fake.gradient);
      Gradients gh = gh_real;
      accumulate(gh, gh_fake);
      Gradients gt = gan.trunk.backward(t_real, gh_real.input);
      Matrix fake_trunk_grad = gh_fake.input;
      double d_loss = l_real.value + l_fake.value;

      std::optional<Gradients> ga;
      if (info) {
        const ForwardCache a_fake = gan.aux->forward(t_fake.output());
        LossResult q = loss_categorical(a_fake.output(), fake_oh);
        q.gradient *= config.info_weight;
        ga = gan.aux->backward(a_fake, q.gradient);
        fake_trunk_grad += ga->input;
      }
      accumulate(gt, gan.trunk.backward(t_fake, fake_trunk_grad));
      if (!std::isfinite(d_loss)) throw DivergenceError("non-finite discriminator loss");
      sgd_step(gan.head, gh, config.discriminator);
      sgd_step(gan.trunk, gt, config.discriminator);
      if (ga) sgd_step(*gan.aux, *ga, config.discriminator);

      // Generator update, non-saturating: push D(G(z)) toward 1.
      Matrix g_oh;
      const ForwardCache g_pass = gan.generator.forward(generator_input(rng, n, nullptr, &g_oh));
      const ForwardCache t_gen = gan.trunk.forward(g_pass.output());
      const ForwardCache h_gen = gan.head.forward(t_gen.output());
      const LossResult adv = loss_bce(h_gen.output(), 1.0);
      Matrix trunk_grad = gan.head.backward(h_gen, adv.gradient).input;
      double q_value = 0.0;
      if (info) {
        const ForwardCache a_gen = gan.aux->forward(t_gen.output());
        LossResult q = loss_categorical(a_gen.output(), g_oh);
        q_value = q.value;
        q.gradient *= config.info_weight;
        trunk_grad += gan.aux->backward(a_gen, q.gradient).input;
      }
      const Matrix sample_grad = gan.trunk.backward(t_gen, trunk_grad).input;
      const double g_loss = adv.value + config.info_weight * q_value;
      if (!std::isfinite(g_loss)) throw DivergenceError("non-finite generator loss");
      sgd_step(gan.generator, gan.generator.backward(g_pass, sample_grad), config.generator);

      acc.discriminator += d_loss;
      acc.generator += adv.value;
      acc.info += q_value;
    }
    } catch (const DivergenceError& e) {
      throw DivergenceError("toy " + std::string(to_string(variant)) + " GAN diverged at epoch " +
                                std::to_string(epoch) + ": " + e.what(),
                            e.layer());
    }
    const auto batches = static_cast<double>(config.batches_per_epoch);
    result.losses.push_back(
        {acc.discriminator / batches, acc.generator / batches, acc.info / batches});
  }

  Rng out_rng(derive_seed(seed, "toy-output"));
  const std::size_t m = config.output_samples;
  Matrix oh;
  Labels ids;
  const Matrix input = generator_input(out_rng, m, &ids, &oh);
  result.source = input.leftCols(2);
  result.generated = gan.generator.predict(input);
  result.conditioning = std::move(ids);
  PriorSample t = sample(gan.target, m, out_rng);
  result.target = std::move(t.values);
  result.target_modes = std::move(t.component);
  return result;
}

Labels nearest_modes(const Matrix& samples, const Matrix& modes) {
  if (samples.cols() != modes.cols()) throw ShapeError("nearest_modes: dimension mismatch");
  Labels out(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = (samples.row(i) - modes.row(0)).squaredNorm();
    for (Eigen::Index k = 1; k < modes.rows(); ++k) {
      const double d = (samples.row(i) - modes.row(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

PurityReport cluster_purity(const Matrix& samples, const Labels& labels, const Matrix& modes,
                            int num_labels) {
  if (static_cast<std::size_t>(samples.rows()) != labels.size()) {
    throw ShapeError("cluster_purity: one label per sample required");
  }
  const Labels nearest = nearest_modes(samples, modes);
  const auto k = static_cast<std::size_t>(modes.rows());
  std::vector<std::vector<std::size_t>> counts(static_cast<std::size_t>(num_labels),
                                               std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_labels) throw ContractError("cluster_purity: bad label");
    ++counts[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(nearest[i])];
  }
  PurityReport r;
  std::size_t agree = 0;
  std::vector<bool> used(k, false);
  r.bijective = static_cast<std::size_t>(num_labels) == k;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < k; ++m) {
      if (counts[l][m] > counts[l][best]) best = m;
    }
    r.mapping.push_back(static_cast<int>(best));
    agree += counts[l][best];
    if (used[best]) r.bijective = false;
    used[best] = true;
  }
  r.purity = labels.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(labels.size());
  return r;
}

int mode_coverage(const Matrix& samples, const Matrix& modes, double min_fraction) {
  if (samples.rows() == 0) return 0;
  const Labels nearest = nearest_modes(samples, modes);
  std::vector<std::size_t> counts(static_cast<std::size_t>(modes.rows()), 0);
  for (int m : nearest) ++counts[static_cast<std::size_t>(m)];
  int covered = 0;
  for (std::size_t c : counts) {
    if (static_cast<double>(c) >= min_fraction * static_cast<double>(samples.rows())) ++covered;
  }
  return covered;
}

}  // namespace emogan
