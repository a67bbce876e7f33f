#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "probemb/dataset.hpp"
#include "probemb/trainer.hpp"
#include "test_support.hpp"

namespace probemb {
namespace {

using testing::check_gradients;
using testing::random_unit_rows;

struct E2eCase {
  Family family;
  Variant variant;
  LossKind loss;
};

std::string case_name(const E2eCase& c) {
  std::string s = to_string(c.family) + "_" + to_string(c.variant) + "_" + to_string(c.loss);
  for (char& ch : s) {
    if (ch == '-') ch = '_';
  }
  return s;
}

class EndToEndGradTest : public ::testing::TestWithParam<E2eCase> {};

TEST_P(EndToEndGradTest, AdapterGradientsMatchFiniteDifferences) {
  const E2eCase c = GetParam();
  AdapterConfig cfg{.d_in = 16, .d_hidden = 16, .family = c.family, .variant = c.variant};
  Model model = Model::init(cfg, 4);
  // Non-trivial τ and bias so their gradients are exercised away from defaults.
  model.primary().log_tau = 0.4;
  model.primary().siglip_bias = -1.5;

  std::mt19937_64 rng(17);
  const Matrix texts = random_unit_rows(8, 16, rng);
  const Matrix images = random_unit_rows(8, 16, rng);

  const StepGradients sg = loss_and_gradients(model, c.loss, texts, images);
  auto loss = [&] { return loss_and_gradients(model, c.loss, texts, images).loss; };

  if (model.text_adapter) {
    ASSERT_TRUE(sg.text.has_value());
    const auto r = check_gradients(model.text_adapter->trainable(), sg.text->trainable(), loss);
    EXPECT_EQ(r.failures, 0u) << "text adapter: " << r.first_failure << " worst " << r.worst_rel;
  }
  if (model.image_adapter) {
    ASSERT_TRUE(sg.image.has_value());
    const auto r = check_gradients(model.image_adapter->trainable(), sg.image->trainable(), loss);
    EXPECT_EQ(r.failures, 0u) << "image adapter: " << r.first_failure << " worst " << r.worst_rel;
  }
}

INSTANTIATE_TEST_SUITE_P(
    All, EndToEndGradTest,
    ::testing::Values(E2eCase{Family::vmf, Variant::asym_text, LossKind::infonce},
                      E2eCase{Family::vmf, Variant::asym_image, LossKind::infonce},
                      E2eCase{Family::vmf, Variant::symmetric, LossKind::infonce},
                      E2eCase{Family::vmf, Variant::asym_text, LossKind::siglip},
                      E2eCase{Family::ps, Variant::asym_text, LossKind::infonce},
                      E2eCase{Family::ps, Variant::symmetric, LossKind::siglip},
                      E2eCase{Family::gauss, Variant::asym_text, LossKind::infonce},
                      E2eCase{Family::gauss, Variant::asym_text, LossKind::siglip},
                      E2eCase{Family::deterministic, Variant::asym_text, LossKind::infonce},
                      E2eCase{Family::deterministic, Variant::symmetric, LossKind::infonce}),
    [](const auto& info) { return case_name(info.param); });

TEST(CosineLr, Endpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 100, 0.1, 1e-4), 0.1);
  EXPECT_DOUBLE_EQ(cosine_lr(100, 100, 0.1, 1e-4), 1e-4);
  EXPECT_NEAR(cosine_lr(50, 100, 0.1, 1e-4), 0.5 * (0.1 + 1e-4), 1e-15);
}

TEST(CosineLr, NonIncreasing) {
  double prev = cosine_lr(0, 37, 1.0, 0.0);
  for (int s = 1; s <= 37; ++s) {
    const double lr = cosine_lr(s, 37, 1.0, 0.0);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(SgdMomentum, ClassicUpdate) {
  std::vector<double> p{1.0, -2.0}, g{0.5, 1.0}, v{0.2, 0.0};
  sgd_momentum_step(p, g, v, 0.1, 0.9);
  EXPECT_DOUBLE_EQ(v[0], 0.9 * 0.2 + 0.5);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
  EXPECT_DOUBLE_EQ(p[0], 1.0 - 0.1 * v[0]);
  EXPECT_DOUBLE_EQ(p[1], -2.0 - 0.1);
}

TEST(SgdMomentum, ZeroGradientLeavesParamsUnchanged) {
  AdapterParams p = init_adapter({.d_in = 4, .d_hidden = 3}, 1);
  const AdapterParams before = p;
  AdapterGrads g = AdapterGrads::zeros_like(p);
  AdapterGrads v = AdapterGrads::zeros_like(p);
  sgd_momentum_step(p, g, v, 0.1, 0.9);
  EXPECT_EQ(p.layers[0].weight, before.layers[0].weight);
  EXPECT_EQ(p.log_tau, before.log_tau);
}

PairedEmbeddingDataset small_dataset(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  Matrix images = random_unit_rows(n, d, rng);
  Matrix texts = images;
  for (Eigen::Index i = 0; i < texts.size(); ++i) texts.data()[i] += noise(rng);
  PairList pl;
  for (int i = 0; i < n; ++i) pl.pairs.push_back({i, i});
  return make_dataset(texts, images, pl);
}

TEST(Train, LossDecreasesOnAlignedData) {
  const auto ds = small_dataset(96, 8, 2);
  TrainConfig tc{.lr0 = 0.05, .batch_size = 32, .epochs = 15, .seed = 3};
  const TrainResult r = train(tc, {.d_in = 8, .d_hidden = 16}, ds);
  ASSERT_EQ(r.history.epoch_loss.size(), 15u);
  EXPECT_LT(r.history.epoch_loss.back(), r.history.epoch_loss.front());
  EXPECT_EQ(r.history.step_loss.size(), 45u);
  EXPECT_DOUBLE_EQ(r.history.final_lr, cosine_lr(44, 45, tc.lr0, tc.lr_min));
}

TEST(Train, DeterministicForFixedSeed) {
  const auto ds = small_dataset(40, 6, 5);
  TrainConfig tc{.batch_size = 16, .epochs = 3, .seed = 9};
  const AdapterConfig ac{.d_in = 6, .d_hidden = 8};
  const TrainResult a = train(tc, ac, ds);
  const TrainResult b = train(tc, ac, ds);
  EXPECT_EQ(a.history.step_loss, b.history.step_loss);
  EXPECT_EQ(a.model.text_adapter->layers[2].weight, b.model.text_adapter->layers[2].weight);
}

TEST(Train, TrailingBatchOfOneIsDropped) {
  const auto ds = small_dataset(33, 6, 5);
  TrainConfig tc{.batch_size = 16, .epochs = 2};
  const TrainResult r = train(tc, {.d_in = 6, .d_hidden = 8}, ds);
  EXPECT_EQ(r.history.step_loss.size(), 4u);
}

TEST(Train, TrailingBatchOfTwoIsKept) {
  const auto ds = small_dataset(34, 6, 5);
  TrainConfig tc{.batch_size = 16, .epochs = 2};
  const TrainResult r = train(tc, {.d_in = 6, .d_hidden = 8}, ds);
  EXPECT_EQ(r.history.step_loss.size(), 6u);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  const auto ds = small_dataset(10, 6, 5);
  const AdapterConfig ac{.d_in = 6, .d_hidden = 8};
  const TrainResult r = train({.epochs = 0, .seed = 2}, ac, ds);
  EXPECT_TRUE(r.history.step_loss.empty());
  EXPECT_EQ(r.model.text_adapter->layers[0].weight, Model::init(ac, 2).text_adapter->layers[0].weight);
}

TEST(Train, DivergenceRaisesNumericalError) {
  const auto ds = small_dataset(32, 6, 5);
  TrainConfig tc{.lr0 = 1e300, .lr_min = 1e300, .batch_size = 16, .epochs = 5};
  EXPECT_THROW(train(tc, {.d_in = 6, .d_hidden = 8}, ds), NumericalError);
}

TEST(Train, RejectsInvalidConfigs) {
  const auto ds = small_dataset(10, 6, 5);
  const AdapterConfig ac{.d_in = 6, .d_hidden = 8};
  EXPECT_THROW(train({.batch_size = 1}, ac, ds), DomainError);
  EXPECT_THROW(train({.lr0 = -1.0}, ac, ds), DomainError);
  EXPECT_THROW(train({}, {.d_in = 5, .d_hidden = 8}, ds), DomainError);
}

TEST(LossKindNames, RoundTrip) {
  EXPECT_EQ(loss_from_string(to_string(LossKind::infonce)), LossKind::infonce);
  EXPECT_EQ(loss_from_string(to_string(LossKind::siglip)), LossKind::siglip);
  EXPECT_THROW(loss_from_string("hinge"), DomainError);
}

}  // namespace
}  // namespace probemb
