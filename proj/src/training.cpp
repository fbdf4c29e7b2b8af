#include "emogan/training.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "emogan/errors.hpp"
#include "emogan/losses.hpp"

namespace emogan {

TrainPlan TrainPlan::defaults(ModelKind kind) {
  TrainPlan p;
  const bool m3 = kind == ModelKind::m3;
  p.step1_autoencoder = {0.001, m3 ? 0.0 : 0.9};
  p.step2_d1 = {m3 ? 0.01 : 0.1, 0.0};
  p.step3_encoder = {m3 ? 0.01 : 0.1, 0.0};
  p.step4_d2 = {0.0001, 0.0};
  p.step5_generator = {0.001, 0.0};
  return p;
}

void TrainPlan::validate() const {
  step1_autoencoder.validate();
  step2_d1.validate();
  step3_encoder.validate();
  step4_d2.validate();
  step5_generator.validate();
  if (batch_size == 0) throw ConfigError("TrainPlan: batch size must be positive");
  if (d2_gen_ratio < 1) throw ConfigError("TrainPlan: generator:D2 ratio must be >= 1");
  if (!(info_weight >= 0.0)) throw ConfigError("TrainPlan: info weight must be >= 0");
}

namespace {

void append_losses(std::ostringstream& os, std::size_t epoch, const char* split,
                   const LossSet& s) {
  auto row = [&](const char* name, double v) {
    os << epoch << ',' << split << ',' << name << ',' << format_double(v) << '\n';
  };
  row("reconstruction", s.reconstruction);
  row("d1", s.d1);
  row("encoder", s.encoder);
  if (s.d2) row("d2", *s.d2);
  if (s.generator) row("generator", *s.generator);
  if (s.info) row("info", *s.info);
}

bool finite_set(const LossSet& s) {
  auto ok = [](double v) { return std::isfinite(v); };
  return ok(s.reconstruction) && ok(s.d1) && ok(s.encoder) && (!s.d2 || ok(*s.d2)) &&
         (!s.generator || ok(*s.generator)) && (!s.info || ok(*s.info));
}

// Gradient w.r.t. the first `width` input columns.
Matrix left_block(const Matrix& m, Eigen::Index width) { return m.leftCols(width); }

}  // namespace

std::string LossHistory::to_csv() const {
  std::ostringstream os;
  os << "epoch,split,loss_name,value\n";
  for (const auto& r : records) {
    append_losses(os, r.epoch, "train", r.train);
    append_losses(os, r.epoch, "validation", r.validation);
  }
  return os.str();
}

void LossHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << to_csv();
}

bool LossHistory::all_finite() const {
  for (const auto& r : records) {
    if (!finite_set(r.train) || !finite_set(r.validation)) return false;
  }
  return true;
}

Trainer::Trainer(GanModel& model, TrainPlan plan)
    : model_(model), plan_(std::move(plan)), rng_(derive_seed(plan_.seed, "trainer")) {
  plan_.validate();
}

void Trainer::check_loss(double value, const char* step) const {
  if (!std::isfinite(value) || value > kDivergenceThreshold) {
    std::ostringstream os;
    os << step << " diverged at epoch " << epoch_ << " (loss " << value << ")";
    throw DivergenceError(os.str());
  }
}

double Trainer::step1_autoencoder(const Matrix& batch) {
  if (batch.rows() == 0) throw ContractError("step1_autoencoder: empty batch");
  const ForwardCache enc = model_.encoder.forward(batch);
  const ForwardCache dec = model_.decoder.forward(enc.output());
  const LossResult loss = loss_mse(dec.output(), batch);
  check_loss(loss.value, "step1_autoencoder");
  const Gradients g_dec = model_.decoder.backward(dec, loss.gradient);
  const Gradients g_enc = model_.encoder.backward(enc, g_dec.input);
  sgd_step(model_.decoder, g_dec, plan_.step1_autoencoder);
  sgd_step(model_.encoder, g_enc, plan_.step1_autoencoder);
  ++counters_.step1;
  return loss.value;
}

double Trainer::step2_d1(const Matrix& real, const Labels& labels, const PriorCodes& prior) {
  if (real.rows() == 0) throw ContractError("step2_d1: empty batch");
  if (prior.codes.rows() != real.rows() || labels.size() != static_cast<std::size_t>(real.rows())) {
    throw ContractError("step2_d1: real and prior batches must have equal counts");
  }
  const Matrix codes = model_.encoder.predict(real);
  const Matrix real_in = hconcat(codes, one_hot_rows(labels, kNumClasses));
  const Matrix fake_in = hconcat(prior.codes, prior.one_hot);

  const ForwardCache real_pass = model_.d1.forward(real_in);
  const LossResult real_loss = loss_bce(real_pass.output(), 1.0);
  const ForwardCache fake_pass = model_.d1.forward(fake_in);
  const LossResult fake_loss = loss_bce(fake_pass.output(), 0.0);
  const double total = real_loss.value + fake_loss.value;
  check_loss(total, "step2_d1");

  Gradients g = model_.d1.backward(real_pass, real_loss.gradient);
  const Gradients g_fake = model_.d1.backward(fake_pass, fake_loss.gradient);
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    g.layers[i].weight += g_fake.layers[i].weight;
    g.layers[i].bias += g_fake.layers[i].bias;
  }
  sgd_step(model_.d1, g, plan_.step2_d1);
  ++counters_.step2;
  return total;
}

double Trainer::step2_d1(const Matrix& real, const Labels& labels) {
  const PriorCodes prior =
      sample_prior_codes(model_, static_cast<std::size_t>(real.rows()), std::nullopt, rng_);
  return step2_d1(real, labels, prior);
}

double Trainer::step3_encoder(const Matrix& real, const Labels& labels) {
  if (real.rows() == 0) throw ContractError("step3_encoder: empty batch");
  const ForwardCache enc = model_.encoder.forward(real);
  const ForwardCache disc =
      model_.d1.forward(hconcat(enc.output(), one_hot_rows(labels, kNumClasses)));
  const LossResult loss = loss_bce(disc.output(), 0.0);
  check_loss(loss.value, "step3_encoder");
  const Gradients g_disc = model_.d1.backward(disc, loss.gradient);
  const Gradients g_enc = model_.encoder.backward(enc, left_block(g_disc.input, model_.code_dim));
  sgd_step(model_.encoder, g_enc, plan_.step3_encoder);
  ++counters_.step3;
  return loss.value;
}

Matrix Trainer::synthesize(std::size_t n, Rng& rng, Labels& labels, Matrix& one_hot,
                           Matrix* generator_input) const {
  PriorCodes codes = sample_prior_codes(model_, n, std::nullopt, rng);
  labels = std::move(codes.ids);
  one_hot = std::move(codes.one_hot);
  if (generator_input != nullptr) *generator_input = std::move(codes.generator_input);
  return model_.decoder.predict(codes.codes);
}

double Trainer::step4_d2(const Matrix& real, const Labels& labels, std::size_t n_synthetic) {
  if (!model_.has_data_discriminator()) {
    throw UnsupportedOperation("step4_d2: model " + std::string(to_string(model_.kind)) +
                               " has no data discriminator");
  }
  if (real.rows() == 0) throw ContractError("step4_d2: empty batch");
  if (n_synthetic != static_cast<std::size_t>(real.rows())) {
    throw ContractError("step4_d2: synthetic count " + std::to_string(n_synthetic) +
                        " differs from real count " + std::to_string(real.rows()));
  }
  Labels synth_labels;
  Matrix synth_one_hot;
  const Matrix synth = synthesize(n_synthetic, rng_, synth_labels, synth_one_hot, nullptr);

  Mlp& trunk = *model_.d2_trunk;
  Mlp& head = *model_.d2_head;
  const ForwardCache t_fake = trunk.forward(hconcat(synth, synth_one_hot));
  const ForwardCache h_fake = head.forward(t_fake.output());
  const LossResult fake_loss = loss_bce(h_fake.output(), 1.0);
  const ForwardCache t_real = trunk.forward(hconcat(real, one_hot_rows(labels, kNumClasses)));
  const ForwardCache h_real = head.forward(t_real.output());
  const LossResult real_loss = loss_bce(h_real.output(), 0.0);
  const double total = fake_loss.value + real_loss.value;
  check_loss(total, "step4_d2");

  Gradients gh = head.backward(h_fake, fake_loss.gradient);
  const Gradients gh_real = head.backward(h_real, real_loss.gradient);
  Gradients gt = trunk.backward(t_fake, gh.input);
  const Gradients gt_real = trunk.backward(t_real, gh_real.input);
  for (std::size_t i = 0; i < gh.layers.size(); ++i) {
    gh.layers[i].weight += gh_real.layers[i].weight;
    gh.layers[i].bias += gh_real.layers[i].bias;
  }
  for (std::size_t i = 0; i < gt.layers.size(); ++i) {
    gt.layers[i].weight += gt_real.layers[i].weight;
    gt.layers[i].bias += gt_real.layers[i].bias;
  }
  sgd_step(head, gh, plan_.step4_d2);
  sgd_step(trunk, gt, plan_.step4_d2);
  ++counters_.step4;
  return total;
}

GeneratorLoss Trainer::step5_generator(std::size_t n) {
  if (!model_.has_data_discriminator()) {
    throw UnsupportedOperation("step5_generator: model " + std::string(to_string(model_.kind)) +
                               " has no data discriminator");
  }
  if (n == 0) throw ContractError("step5_generator: empty batch");
  const bool m3 = model_.kind == ModelKind::m3;
  const Eigen::Index f = model_.feature_dim;

  PriorCodes prior = sample_prior_codes(model_, n, std::nullopt, rng_);
  std::optional<ForwardCache> cg;
  if (m3) cg = model_.code_generator->forward(prior.generator_input);
  const ForwardCache dec = model_.decoder.forward(m3 ? cg->output() : prior.codes);
  const Matrix& synth = dec.output();

  const Mlp& trunk = *model_.d2_trunk;
  const Mlp& head = *model_.d2_head;
  const ForwardCache t_adv = trunk.forward(hconcat(synth, prior.one_hot));
  const ForwardCache h_adv = head.forward(t_adv.output());
  const LossResult adv = loss_bce(h_adv.output(), 0.0);

  GeneratorLoss out;
  out.adversarial = adv.value;
  Matrix d_synth =
      left_block(trunk.backward(t_adv, head.backward(h_adv, adv.gradient).input).input, f);

  std::optional<Gradients> g_aux;
  if (m3) {
    const ForwardCache t_aux = trunk.forward(aux_input(synth));
    const ForwardCache a_pass = model_.aux_head->forward(t_aux.output());
    LossResult q = loss_categorical(a_pass.output(), prior.one_hot);
    out.info = plan_.info_weight * q.value;
    q.gradient *= plan_.info_weight;
    g_aux = model_.aux_head->backward(a_pass, q.gradient);
    d_synth += left_block(trunk.backward(t_aux, g_aux->input).input, f);
  }
  check_loss(out.total(), "step5_generator");

  const Gradients g_dec = model_.decoder.backward(dec, d_synth);
  std::optional<Gradients> g_cg;
  if (m3) g_cg = model_.code_generator->backward(*cg, g_dec.input);

  sgd_step(model_.decoder, g_dec, plan_.step5_generator);
  if (m3) {
    sgd_step(*model_.code_generator, *g_cg, plan_.step5_generator);
    sgd_step(*model_.aux_head, *g_aux, plan_.step5_generator);
  }
  ++counters_.step5;
  return out;
}

LossSet Trainer::evaluate(const Corpus& split, std::uint64_t seed) const {
  LossSet s;
  if (split.size() == 0) return s;
  Rng rng(seed);
  const Matrix& x = split.features;
  const Matrix x_oh = one_hot_rows(split.labels, kNumClasses);
  const Matrix codes = model_.encoder.predict(x);
  s.reconstruction = loss_mse(model_.decoder.predict(codes), x).value;

  const PriorCodes prior = sample_prior_codes(model_, split.size(), std::nullopt, rng);
  const Matrix d_real = model_.d1.predict(hconcat(codes, x_oh));
  const Matrix d_prior = model_.d1.predict(hconcat(prior.codes, prior.one_hot));
  s.d1 = loss_bce(d_real, 1.0).value + loss_bce(d_prior, 0.0).value;
  s.encoder = loss_bce(d_real, 0.0).value;

  if (model_.has_data_discriminator()) {
    Labels synth_labels;
    Matrix synth_oh;
    const Matrix synth = synthesize(split.size(), rng, synth_labels, synth_oh, nullptr);
    const DataVerdict on_synth = discriminate_data(model_, synth, synth_oh);
    const DataVerdict on_real = discriminate_data(model_, x, x_oh);
    const Matrix p_synth = on_synth.probability;
    s.d2 = loss_bce(p_synth, 1.0).value + loss_bce(Matrix(on_real.probability), 0.0).value;
    s.generator = loss_bce(p_synth, 0.0).value;
    if (on_synth.aux) s.info = plan_.info_weight * loss_categorical(*on_synth.aux, synth_oh).value;
  }
  return s;
}

LossHistory Trainer::train(const Corpus& train, const Corpus& validation) {
  LossHistory history;
  if (plan_.epochs == 0) return history;
  if (train.size() == 0) throw DegenerateDataError("train: empty training split");
  if (train.feature_dim() != model_.feature_dim) {
    throw ShapeError("train: corpus has " + std::to_string(train.feature_dim()) +
                     " features, model expects " + std::to_string(model_.feature_dim));
  }
  const bool data_gan = model_.has_data_discriminator();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t e = 1; e <= plan_.epochs; ++e) {
    epoch_ = e;
    Rng shuffler(derive_seed(plan_.seed, "batches", e));
    shuffler.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += plan_.batch_size) {
      const std::size_t stop = std::min(order.size(), start + plan_.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Matrix batch = take_rows(train.features, idx);
      Labels labels;
      labels.reserve(idx.size());
      for (std::size_t i : idx) labels.push_back(train.labels[i]);

      try {
        step1_autoencoder(batch);
        step2_d1(batch, labels);
        step3_encoder(batch, labels);
        if (data_gan) {
          step4_d2(batch, labels, idx.size());
          for (int r = 0; r < plan_.d2_gen_ratio; ++r) step5_generator(idx.size());
        }
      } catch (const DivergenceError& err) {
        if (std::string(err.what()).find("epoch") != std::string::npos) throw;
        throw DivergenceError(std::string(err.what()) + " (epoch " + std::to_string(e) + ")",
                              err.layer());
      }
    }
    EpochRecord rec;
    rec.epoch = e;
    const std::uint64_t eval_seed = derive_seed(plan_.seed, "evaluate", e);
    rec.train = evaluate(train, eval_seed);
    rec.validation = evaluate(validation, eval_seed);
    if (!finite_set(rec.train) || !finite_set(rec.validation)) {
      throw DivergenceError("evaluation produced non-finite losses at epoch " + std::to_string(e));
    }
    history.records.push_back(rec);
  }
  return history;
}

TrainResult train(GanModel& model, const Corpus& train, const Corpus& validation,
                  const TrainPlan& plan) {
  Trainer trainer(model, plan);
  TrainResult r;
  r.history = trainer.train(train, validation);
  r.counters = trainer.counters();
  return r;
}

}  // namespace emogan
