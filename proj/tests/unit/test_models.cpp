#include <array>
#include <cmath>

#include "doctest.h"
#include "emogan/errors.hpp"
#include "emogan/models.hpp"
#include "emogan/toy_gan.hpp"
#include "support.hpp"

using namespace emogan;
using Dims = std::vector<int>;

constexpr ScaleProfile kSmall{0.05};

namespace {

void zero_last(Mlp& net) {
  auto& l = net.mutable_layers().back();
  l.weight.setZero();
  l.bias.setZero();
}

}  // namespace

TEST_CASE("reference-size M1 and M2 reproduce the architecture table") {
  const GanModel m1 = build(ModelKind::m1, 1582, ScaleProfile::full(), 1);
  CHECK(m1.encoder.dims() == Dims{1582, 1000, 500, 100, 2});
  CHECK(m1.decoder.dims() == Dims{2, 100, 500, 1000, 1582});
  CHECK(m1.d1.dims() == Dims{6, 1000, 500, 100, 1});
  CHECK_FALSE(m1.d2_trunk.has_value());
  CHECK_FALSE(m1.code_generator.has_value());

  const GanModel m2 = build(ModelKind::m2, 1582, ScaleProfile::full(), 1);
  CHECK(m2.d2_trunk->dims() == Dims{1586, 1000, 500, 100});
  CHECK(m2.d2_head->dims() == Dims{100, 1});
  CHECK_FALSE(m2.aux_head.has_value());
}

TEST_CASE("reference-size M3 reproduces the architecture table") {
  const GanModel m3 = build(ModelKind::m3, 1582, ScaleProfile::full(), 1);
  CHECK(m3.encoder.dims() == Dims{1582, 1000, 700, 300, 256});
  CHECK(m3.decoder.dims() == Dims{256, 300, 700, 1000, 1582});
  CHECK(m3.d1.dims() == Dims{260, 1000, 500, 100, 1});
  CHECK(m3.code_generator->dims() == Dims{24, 140, 256});
  CHECK(m3.d2_trunk->dims() == Dims{1586, 1000, 500, 100});
  CHECK(m3.d2_head->dims() == Dims{100, 1});
  CHECK(m3.aux_head->dims() == Dims{100, 128, 4});
  CHECK(m3.aux_head->layers().back().activation == Activation::softmax);
  CHECK(std::get<NormalPrior>(m3.prior).dim == 20);
}

TEST_CASE("scaled profiles keep chains valid and the 2-d bottleneck") {
  for (ModelKind k : {ModelKind::m1, ModelKind::m2, ModelKind::m3}) {
    for (ScaleProfile p : {ScaleProfile::quarter(), ScaleProfile::proportional(64)}) {
      const GanModel m = build(k, 64, p, 3);
      CHECK(m.encoder.input_dim() == 64);
      CHECK(m.decoder.output_dim() == 64);
      CHECK(m.encoder.output_dim() == m.code_dim);
      CHECK(m.d1.input_dim() == m.code_dim + 4);
      if (k != ModelKind::m3) CHECK(m.code_dim == 2);
      if (k == ModelKind::m3) CHECK(m.code_dim == std::max(8, static_cast<int>(std::lround(256 * p.width_ratio))));
      for (int d : m.encoder.dims()) CHECK(d >= 2);
    }
  }
  CHECK(ScaleProfile::proportional(64).width(1000) == 40);
  CHECK(ScaleProfile::proportional(64).width(100) == 8);
  CHECK_THROWS_AS(build(ModelKind::m1, 3, ScaleProfile::full(), 1), ConfigError);
  CHECK_THROWS_AS(build(ModelKind::m3, 100, ScaleProfile::full(), 1), ConfigError);
}

TEST_CASE("encode: zero-weight encoder gives zero codes, one code per row") {
  GanModel m = build(ModelKind::m1, 16, ScaleProfile::quarter(), 4);
  Rng rng(1);
  const Matrix x = testing::random_matrix(9, 16, rng);
  CHECK(encode(m, x).rows() == 9);
  CHECK(encode(m, x).cols() == 2);
  for (auto& l : m.encoder.mutable_layers()) {
    l.weight.setZero();
    l.bias.setZero();
  }
  CHECK(encode(m, x).isZero(0.0));
  CHECK_THROWS_AS(encode(m, Matrix::Zero(2, 15)), ShapeError);
  const GanModel m3 = build(ModelKind::m3, 64, ScaleProfile::quarter(), 4);
  CHECK(encode(m3, testing::random_matrix(3, 64, rng)).cols() == 64);
}

TEST_CASE("generate: labels, counts and replay") {
  for (ModelKind k : {ModelKind::m1, ModelKind::m3}) {
    const GanModel m = build(k, 16, kSmall, 5);
    const SyntheticBatch big = generate(m, 6000, std::nullopt, 11);
    REQUIRE(big.features.rows() == 6000);
    std::array<int, 4> counts{};
    for (int l : big.labels) ++counts[static_cast<std::size_t>(l)];
    // 3 sigma of a binomial(6000, 1/4) count is about 100.
    for (int c : counts) CHECK(std::abs(c - 1500) < 100);
    CHECK(all_finite(big.features));

    const SyntheticBatch one = generate(m, 1, 2, 12);
    CHECK(one.features.rows() == 1);
    CHECK(one.labels == Labels{2});

    const SyntheticBatch fixed = generate(m, 300, 1, 13);
    for (int l : fixed.labels) CHECK(l == 1);
    CHECK(generate(m, 50, std::nullopt, 14).features == generate(m, 50, std::nullopt, 14).features);
    CHECK_THROWS_AS(generate(m, 5, 4, 1), ContractError);
  }
}

TEST_CASE("generate without class is uniform within 3 sigma at n = 10^4") {
  const GanModel m = build(ModelKind::m2, 8, ScaleProfile::quarter(), 6);
  const SyntheticBatch b = generate(m, 10000, std::nullopt, 21);
  std::array<int, 4> counts{};
  for (int l : b.labels) ++counts[static_cast<std::size_t>(l)];
  const double sigma = std::sqrt(10000 * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - 2500.0) < 3 * sigma);
}

TEST_CASE("M1/M2 synthetic labels are the mixture component of the code") {
  const GanModel m = build(ModelKind::m1, 8, ScaleProfile::quarter(), 7);
  Rng rng(3);
  const PriorCodes pc = sample_prior_codes(m, 2000, std::nullopt, rng);
  const Labels nearest = nearest_modes(pc.codes, m.mixture().means());
  std::size_t agree = 0;
  for (std::size_t i = 0; i < nearest.size(); ++i) agree += nearest[i] == pc.ids[i];
  // Modes 3 apart with stddev 0.5 overlap in well under 1% of draws.
  CHECK(agree >= 1980);
  CHECK(pc.one_hot == one_hot_rows(pc.ids, 4));
}

TEST_CASE("discriminate_code: zero last layer gives 0.5, one probability per row") {
  GanModel m = build(ModelKind::m1, 8, ScaleProfile::quarter(), 8);
  Rng rng(4);
  const Matrix codes = testing::random_matrix(7, 2, rng);
  const Matrix oh = one_hot_rows({0, 1, 2, 3, 0, 1, 2}, 4);
  const Vector p = discriminate_code(m, codes, oh);
  CHECK(p.size() == 7);
  CHECK((p.array() > 0.0).all());
  CHECK((p.array() < 1.0).all());
  zero_last(m.d1);
  CHECK(discriminate_code(m, codes, oh).isApproxToConstant(0.5, 0.0));
  CHECK_THROWS_AS(discriminate_code(m, Matrix::Zero(7, 3), oh), ShapeError);
}

TEST_CASE("discriminate_data: unsupported on M1, zero heads give 0.5 and uniform aux") {
  const GanModel m1 = build(ModelKind::m1, 8, ScaleProfile::quarter(), 9);
  CHECK_THROWS_AS(discriminate_data(m1, Matrix::Zero(2, 8), one_hot_rows({0, 1}, 4)),
                  UnsupportedOperation);

  GanModel m3 = build(ModelKind::m3, 32, kSmall, 9);
  Rng rng(5);
  const Matrix x = testing::random_matrix(6, 32, rng);
  const Matrix oh = one_hot_rows({0, 1, 2, 3, 2, 1}, 4);
  const DataVerdict v = discriminate_data(m3, x, oh);
  REQUIRE(v.aux.has_value());
  for (Eigen::Index i = 0; i < v.aux->rows(); ++i) CHECK(std::abs(v.aux->row(i).sum() - 1.0) < 1e-9);
  // The auxiliary head never sees the label slot.
  CHECK(discriminate_data(m3, x, one_hot_rows({3, 3, 3, 3, 3, 3}, 4)).aux.value() == *v.aux);
  CHECK(aux_input(x).rightCols(4).isZero(0.0));

  zero_last(*m3.d2_head);
  zero_last(*m3.aux_head);
  const DataVerdict z = discriminate_data(m3, x, oh);
  CHECK(z.probability.isApproxToConstant(0.5, 0.0));
  CHECK(z.aux->isApproxToConstant(0.25, 1e-15));
  CHECK_FALSE(discriminate_data(build(ModelKind::m2, 8, ScaleProfile::quarter(), 1),
                                Matrix::Zero(1, 8), one_hot_rows({0}, 4))
                  .aux.has_value());
}

TEST_CASE("model bundle round-trips every component") {
  const auto dir = testing::scratch_dir("bundle");
  for (ModelKind k : {ModelKind::m1, ModelKind::m2, ModelKind::m3}) {
    const GanModel m = build(k, 24, kSmall, 10);
    const auto path = dir / "m.emgb";
    save_model(path, m, {{"note", "x"}});
    nlohmann::json extra;
    const GanModel back = load_model(path, &extra);
    CHECK(back.kind == k);
    CHECK(model_checksum(back) == model_checksum(m));
    CHECK(extra["note"] == "x");
    CHECK(generate(back, 20, std::nullopt, 3).features == generate(m, 20, std::nullopt, 3).features);
  }
  CHECK_THROWS_AS(load_model(dir / "missing.emgb"), ParseError);
}

TEST_CASE("nearest-mode oracles") {
  const Matrix modes = orthogonal_mixture(3.0, 0.5).means();
  Matrix pts(3, 2);
  pts << 2.9, 0.2, -0.1, -2.5, 0.4, 1.9;
  CHECK(nearest_modes(pts, modes) == Labels{0, 3, 1});

  // Purity: labels 0..3 sent to modes 1,0,3,2 except one stray.
  Matrix g(9, 2);
  g << 0, 3, 0, 3, 3, 0, 3, 0, 0, -3, 0, -3, -3, 0, -3, 0, 3, 0;
  const PurityReport r = cluster_purity(g, {0, 0, 1, 1, 2, 2, 3, 3, 3}, modes);
  CHECK(r.purity == doctest::Approx(8.0 / 9.0));
  CHECK(r.mapping == std::vector<int>{1, 0, 3, 2});
  CHECK(r.bijective);
  const PurityReport collapsed = cluster_purity(g.topRows(2).replicate(4, 1), {0, 0, 1, 1, 2, 2, 3, 3}, modes);
  CHECK(collapsed.purity == 1.0);
  CHECK_FALSE(collapsed.bijective);

  Matrix cov(100, 2);
  for (int i = 0; i < 100; ++i) cov.row(i) = modes.row(i < 96 ? i % 3 : 3);
  CHECK(mode_coverage(cov, modes, 0.05) == 3);
  CHECK(mode_coverage(cov, modes, 0.04) == 4);
}

TEST_CASE("toy GAN guards zero epochs and builds the stated shapes") {
  ToyGanConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(toy_train_and_sample(ToyVariant::info, orthogonal_mixture(), c, 1), ConfigError);
  const ToyGan info = make_toy_gan(ToyVariant::info, orthogonal_mixture(), 128, 1);
  CHECK(info.generator.dims() == Dims{6, 128, 128, 2});
  CHECK(info.trunk.dims() == Dims{2, 128, 128});
  CHECK(info.head.dims() == Dims{128, 1});
  CHECK(info.aux->dims() == Dims{128, 4});
  const ToyGan vanilla = make_toy_gan(ToyVariant::vanilla, orthogonal_mixture(), 128, 1);
  CHECK(vanilla.generator.dims() == Dims{2, 128, 128, 2});
  CHECK_FALSE(vanilla.aux.has_value());
}

TEST_CASE("toy GAN: short info run emits labelled samples and finite losses") {
  ToyGanConfig c;
  c.epochs = 3;
  c.batches_per_epoch = 5;
  c.output_samples = 200;
  const ToyResult r = toy_train_and_sample(ToyVariant::info, orthogonal_mixture(), c, 3);
  CHECK(r.generated.rows() == 200);
  CHECK(r.generated.cols() == 2);
  CHECK(r.conditioning.size() == 200);
  CHECK(r.losses.size() == 3);
  for (const auto& l : r.losses) CHECK(std::isfinite(l.discriminator + l.generator + l.info));
  const ToyResult again = toy_train_and_sample(ToyVariant::info, orthogonal_mixture(), c, 3);
  CHECK(again.generated == r.generated);
}

TEST_CASE("toy GAN divergence surfaces with the epoch") {
  ToyGanConfig c;
  c.epochs = 2;
  c.info_weight = std::nan("");
  try {
    toy_train_and_sample(ToyVariant::info, orthogonal_mixture(), c, 1);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}
