#include <algorithm>
#include <array>
#include <cmath>

#include "doctest.h"
#include "emogan/errors.hpp"
#include "emogan/priors.hpp"

using namespace emogan;

TEST_CASE("orthogonal mixture places four means on the axes") {
  const MixturePrior p = orthogonal_mixture(3.0, 0.5);
  REQUIRE(p.size() == 4);
  const Matrix m = p.means();
  Matrix expected(4, 2);
  expected << 3, 0, 0, 3, -3, 0, 0, -3;
  CHECK(m == expected);
  for (double w : p.weights()) CHECK(w == 0.25);
  for (int k = 0; k < 4; ++k) {
    CHECK(m.row(k).dot(m.row((k + 1) % 4)) == 0.0);
    CHECK(m.row(k).norm() == doctest::Approx(3.0));
    CHECK(p.components()[static_cast<std::size_t>(k)].covariance.isApprox(
        0.25 * Eigen::Matrix2d::Identity()));
  }
  CHECK_THROWS_AS(orthogonal_mixture(0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(orthogonal_mixture(3.0, -1.0), ConfigError);
}

TEST_CASE("mixture construction validates weights and covariances") {
  GaussianComponent c;
  CHECK_THROWS_AS(MixturePrior({c, c}, {0.6, 0.6}), ConfigError);
  GaussianComponent asym;
  asym.covariance << 1.0, 0.5, 0.2, 1.0;
  CHECK_THROWS_AS(MixturePrior({asym}, {1.0}), ConfigError);
  GaussianComponent indefinite;
  indefinite.covariance << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(MixturePrior({indefinite}, {1.0}), ConfigError);
  CHECK_NOTHROW(MixturePrior({c, c}, {0.3, 0.7}));
}

TEST_CASE("normal prior sample moments within law-of-large-numbers bounds") {
  Rng rng(101);
  const PriorSample s = sample(NormalPrior(20), 100000, rng);
  REQUIRE(s.values.rows() == 100000);
  REQUIRE(s.values.cols() == 20);
  CHECK(s.component.empty());
  for (Eigen::Index d = 0; d < 20; ++d) {
    const double mean = s.values.col(d).mean();
    const double var = (s.values.col(d).array() - mean).square().sum() / (100000 - 1);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
  }
}

TEST_CASE("mixture component frequencies and per-component means converge") {
  const MixturePrior p = orthogonal_mixture(3.0, 0.5);
  Rng rng(202);
  const std::size_t n = 100000;
  const PriorSample s = sample(p, n, rng);
  std::array<std::size_t, 4> counts{};
  std::array<Eigen::Vector2d, 4> sums{};
  for (auto& v : sums) v.setZero();
  for (std::size_t i = 0; i < n; ++i) {
    const int k = s.component[i];
    ++counts[static_cast<std::size_t>(k)];
    sums[static_cast<std::size_t>(k)] += s.values.row(static_cast<Eigen::Index>(i)).transpose();
  }
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(static_cast<double>(counts[k]) / n - 0.25) < 0.01);
    const Eigen::Vector2d mean = sums[k] / static_cast<double>(counts[k]);
    const double bound = 3.0 * 0.5 / std::sqrt(static_cast<double>(counts[k]));
    CHECK((mean - p.components()[k].mean).cwiseAbs().maxCoeff() < bound);
  }
}

TEST_CASE("single draw gives one row and one id") {
  const PriorSample s = sample(Prior(orthogonal_mixture()), 1, 5);
  CHECK(s.values.rows() == 1);
  CHECK(s.component.size() == 1);
}

TEST_CASE("sampling replays bit-identically under a seed") {
  const Prior p = orthogonal_mixture();
  const PriorSample a = sample(p, 500, 77);
  const PriorSample b = sample(p, 500, 77);
  CHECK(a.values == b.values);
  CHECK(a.component == b.component);
  CHECK_FALSE(sample(p, 500, 78).values == a.values);
}

TEST_CASE("forced components sample around the requested mode") {
  const MixturePrior p = orthogonal_mixture(3.0, 0.5);
  Rng rng(3);
  const Labels ids(2000, 2);
  const Matrix x = sample_components(p, ids, rng);
  CHECK(x.col(0).mean() == doctest::Approx(-3.0).epsilon(0.02));
  CHECK(std::abs(x.col(1).mean()) < 0.05);
  CHECK_THROWS_AS(sample_components(p, {4}, rng), ContractError);
}

TEST_CASE("one-hot rows are valid and uniformly distributed") {
  const OneHotBatch b = one_hot(LabelSource{4}, 40000, 9);
  std::array<std::size_t, 4> counts{};
  for (Eigen::Index i = 0; i < b.rows.rows(); ++i) {
    CHECK(b.rows.row(i).sum() == 1.0);
    CHECK((b.rows.row(i).array() != 0.0).count() == 1);
    CHECK(b.rows(i, b.ids[static_cast<std::size_t>(i)]) == 1.0);
    ++counts[static_cast<std::size_t>(b.ids[static_cast<std::size_t>(i)])];
  }
  for (std::size_t c : counts) CHECK(std::abs(c / 40000.0 - 0.25) < 0.01);
  CHECK(one_hot(LabelSource{4}, 100, 9).ids == one_hot(LabelSource{4}, 100, 9).ids);
}

TEST_CASE("derived seeds separate stages and indices") {
  CHECK(derive_seed(1, "train", 0) != derive_seed(1, "train", 1));
  CHECK(derive_seed(1, "train", 0) != derive_seed(1, "build", 0));
  CHECK(derive_seed(1, "train", 0) != derive_seed(2, "train", 0));
  CHECK(derive_seed(1, "train", 0) == derive_seed(1, "train", 0));
}

TEST_CASE("rng below() stays in range and shuffle permutes") {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
  std::vector<int> v = {0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}
