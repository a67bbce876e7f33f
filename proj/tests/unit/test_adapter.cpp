#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "probemb/adapter.hpp"
#include "test_support.hpp"

namespace probemb {
namespace {

using testing::random_matrix;

AdapterConfig small_config(Family f = Family::vmf) {
  return {.d_in = 6, .d_hidden = 10, .family = f};
}

TEST(AdapterConfig, Validation) {
  EXPECT_NO_THROW(small_config().validate());
  EXPECT_THROW((AdapterConfig{.d_in = 1}.validate()), DomainError);
  EXPECT_THROW((AdapterConfig{.d_in = 4, .d_hidden = 0}.validate()), DomainError);
  EXPECT_THROW((AdapterConfig{.d_in = 4, .bn_momentum = 1.0}.validate()), DomainError);
  EXPECT_THROW((AdapterConfig{.d_in = 4, .kappa_floor = 0.0}.validate()), DomainError);
  EXPECT_THROW(
      (AdapterConfig{.d_in = 4, .family = Family::gauss, .variant = Variant::symmetric}.validate()),
      DomainError);
}

TEST(AdapterConfig, OutputWidth) {
  EXPECT_EQ(small_config().d_out(), 6);
  EXPECT_EQ(small_config(Family::deterministic).d_out(), 6);
  EXPECT_EQ(small_config(Family::gauss).d_out(), 12);
}

TEST(Adapter, InitShapesAndDefaults) {
  const AdapterParams p = init_adapter(small_config(Family::gauss), 1);
  ASSERT_EQ(p.layers.size(), static_cast<std::size_t>(kAdapterLayers));
  EXPECT_EQ(p.layers[0].weight.rows(), 10);
  EXPECT_EQ(p.layers[0].weight.cols(), 6);
  EXPECT_EQ(p.layers[2].weight.rows(), 12);
  for (const auto& l : p.layers) {
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.bn_scale, Vector::Ones(l.bn_scale.size()));
    EXPECT_EQ(l.bn_shift.cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(p.log_tau, 0.0);
  EXPECT_EQ(p.siglip_bias, -10.0);
  EXPECT_EQ(p.trainable().size(), 4u * kAdapterLayers + 2u);
}

TEST(Adapter, HeInitializationScale) {
  const AdapterParams p = init_adapter({.d_in = 200, .d_hidden = 400}, 3);
  const Matrix& w = p.layers[0].weight;
  const double var = w.array().square().mean();
  EXPECT_NEAR(var, 2.0 / 200.0, 0.05 * 2.0 / 200.0);
}

TEST(Adapter, InitDeterministicPerSeed) {
  EXPECT_EQ(init_adapter(small_config(), 5).layers[1].weight,
            init_adapter(small_config(), 5).layers[1].weight);
  EXPECT_NE(init_adapter(small_config(), 5).layers[1].weight,
            init_adapter(small_config(), 6).layers[1].weight);
}

TEST(Adapter, TrainForwardNormalizesOutputBatch) {
  AdapterParams p = init_adapter(small_config(), 2);
  std::mt19937_64 rng(1);
  const BatchOutput out = forward(p, random_matrix(32, 6, rng), Mode::train);
  ASSERT_TRUE(out.cache.has_value());
  // Identity BN on the last layer: each output column has mean 0, variance ≈ 1.
  const RowVector mean = out.raw.colwise().mean();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-12);
  const RowVector var = (out.raw.rowwise() - mean).array().square().colwise().mean();
  EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), 1e-3);
}

TEST(Adapter, RunningStatisticsUpdate) {
  AdapterParams p = init_adapter(small_config(), 2);
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(5, 6, rng);
  const AdapterParams before = p;
  (void)forward(p, x, Mode::train, 0.25);
  Matrix a = x * p.layers[0].weight.transpose();
  const RowVector mean = a.colwise().mean();
  const RowVector var_unbiased = (a.rowwise() - mean).array().square().colwise().sum() / 4.0;
  EXPECT_LT((p.stats[0].running_mean - 0.25 * mean.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((p.stats[0].running_var - (0.75 * before.stats[0].running_var +
                                       0.25 * var_unbiased.transpose()))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(Adapter, EvalModeUsesRunningStatistics) {
  AdapterParams p = init_adapter(small_config(), 2);
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(7, 6, rng);
  // Fresh statistics (mean 0, var 1): BN is nearly the identity.
  const Matrix y = forward_eval(p, x);
  Matrix h = x;
  for (int l = 0; l < kAdapterLayers; ++l) {
    h = h * p.layers[l].weight.transpose() / std::sqrt(1.0 + kBatchNormEps);
    if (l + 1 < kAdapterLayers) h = h.cwiseMax(0.0);
  }
  EXPECT_LT((y - h).cwiseAbs().maxCoeff(), 1e-12);
  // Rows are scored independently in eval mode.
  EXPECT_LT((forward_eval(p, x.topRows(1)) - y.topRows(1)).cwiseAbs().maxCoeff(), 1e-12);
  const BatchOutput out = forward(p, x, Mode::eval);
  EXPECT_FALSE(out.cache.has_value());
  EXPECT_EQ(out.raw, y);
}

TEST(Adapter, ForwardErrors) {
  AdapterParams p = init_adapter(small_config(), 2);
  std::mt19937_64 rng(1);
  EXPECT_THROW(forward(p, random_matrix(1, 6, rng), Mode::train), DomainError);
  EXPECT_THROW(forward(p, random_matrix(4, 5, rng), Mode::train), DomainError);
  EXPECT_THROW(forward(p, random_matrix(4, 6, rng), Mode::train, 0.0), DomainError);
  const BatchOutput eval = forward(p, random_matrix(4, 6, rng), Mode::eval);
  EXPECT_THROW(backward(p, eval, Matrix::Zero(4, 6)), DomainError);
}

TEST(Adapter, BackwardMatchesFiniteDifferences) {
  for (Family f : {Family::vmf, Family::gauss}) {
    AdapterParams p = init_adapter(small_config(f), 9);
    for (auto& l : p.layers) {
      // Non-trivial BN affine parameters.
      l.bn_scale.array() += 0.3;
      l.bn_shift.array() += 0.1;
    }
    std::mt19937_64 rng(4);
    const Matrix x = random_matrix(9, 6, rng);
    const Matrix w = random_matrix(9, small_config(f).d_out(), rng);
    const BatchOutput out = forward(p, x, Mode::train);
    const AdapterGrads g = backward(p, out, w);
    EXPECT_EQ(g.log_tau, 0.0);
    auto loss = [&] {
      AdapterParams copy = p;
      return (forward(copy, x, Mode::train).raw.array() * w.array()).sum();
    };
    const auto r = testing::check_gradients(p.trainable(), g.trainable(), loss);
    EXPECT_EQ(r.failures, 0u) << to_string(f) << ": " << r.first_failure;
  }
}

TEST(Adapter, AllFiniteDetectsNaN) {
  AdapterParams p = init_adapter(small_config(), 2);
  EXPECT_TRUE(p.all_finite());
  p.layers[1].bias(0) = std::nan("");
  EXPECT_FALSE(p.all_finite());
  p = init_adapter(small_config(), 2);
  p.stats[2].running_var(0) = INFINITY;
  EXPECT_FALSE(p.all_finite());
}

TEST(Decompose, SplitsNormAndDirection) {
  const Vector raw = (Vector(3) << 3, 0, 4).finished();
  const Decomposed d = decompose(raw);
  EXPECT_DOUBLE_EQ(d.kappa, 5.0);
  EXPECT_NEAR((d.mu.values() - raw / 5.0).norm(), 0.0, 1e-15);
}

TEST(Decompose, FloorsKappa) {
  const Vector raw = (Vector(2) << 1e-9, 0).finished();
  EXPECT_DOUBLE_EQ(decompose(raw, 1e-6).kappa, 1e-6);
}

TEST(Decompose, DegenerateRowMapsToFirstAxis) {
  const Decomposed d = decompose(Vector::Zero(4), 1e-6);
  EXPECT_EQ(d.mu.values(), (Vector(4) << 1, 0, 0, 0).finished());
  EXPECT_DOUBLE_EQ(d.kappa, 1e-6);
}

TEST(Decompose, BatchMatchesRowWise) {
  std::mt19937_64 rng(3);
  const Matrix raw = random_matrix(5, 4, rng);
  const DecomposedBatch b = decompose_rows(raw, 1e-6);
  for (int r = 0; r < 5; ++r) {
    const Decomposed d = decompose(raw.row(r).transpose(), 1e-6);
    EXPECT_DOUBLE_EQ(b.kappa(r), d.kappa);
    EXPECT_DOUBLE_EQ(b.norm(r), raw.row(r).norm());
    EXPECT_LT((b.mu.row(r).transpose() - d.mu.values()).norm(), 1e-15);
  }
}

}  // namespace
}  // namespace probemb
