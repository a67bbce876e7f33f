#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "probemb/directional.hpp"
#include "probemb/types.hpp"

namespace probemb {

inline constexpr int kAdapterLayers = 3;
inline constexpr double kBatchNormEps = 1e-5;

struct AdapterConfig {
  int d_in = 0;
  int d_hidden = 512;
  Family family = Family::vmf;
  Variant variant = Variant::asym_text;
  double bn_momentum = 0.1;
  double kappa_floor = 1e-6;

  /// d_in for vmf/ps/deterministic, 2 * d_in (mean ∥ log-variance) for gauss.
  int d_out() const { return family == Family::gauss ? 2 * d_in : d_in; }
  void validate() const;
};

/// One affine layer followed by batch normalization.
/// `weight` is (out × in); the affine map is x ↦ x Wᵀ + b.
struct LayerParams {
  Matrix weight;
  Vector bias;
  Vector bn_scale;
  Vector bn_shift;
};

struct LayerStats {
  Vector running_mean;
  Vector running_var;
};

/// Parameters of the three-layer adapter.
///
/// Trainable tensors are visited in a fixed order that the optimizer and
/// the checkpoint format both rely on: for each layer 0..2 the weight
/// (row-major), bias, bn_scale, bn_shift; then log_tau, then siglip_bias.
struct AdapterParams {
  std::vector<LayerParams> layers;
  std::vector<LayerStats> stats;
  double log_tau = 0.0;
  double siglip_bias = -10.0;

  std::vector<std::span<double>> trainable();
  std::vector<std::span<const double>> trainable() const;
  bool all_finite() const;
};

/// Gradients with the same layout as the trainable part of AdapterParams.
struct AdapterGrads {
  std::vector<LayerParams> layers;
  double log_tau = 0.0;
  double siglip_bias = 0.0;

  static AdapterGrads zeros_like(const AdapterParams& params);
  std::vector<std::span<double>> trainable();
  std::vector<std::span<const double>> trainable() const;
};

enum class Mode { train, eval };

struct LayerCache {
  Matrix input;
  Matrix xhat;
  Vector inv_std;
  Matrix output;  // after BN, before ReLU
};

struct BatchOutput {
  Matrix raw;
  // Present iff the forward pass ran in train mode.
  std::optional<std::vector<LayerCache>> cache;
};

/// He-initialized weights, zero biases, identity batch norm, τ = 1, b = -10.
AdapterParams init_adapter(const AdapterConfig& config, std::uint64_t seed);

/// Train mode normalizes with batch statistics (B >= 2) and updates the
/// running statistics in `params`; eval mode uses the running statistics.
BatchOutput forward(AdapterParams& params, const Matrix& batch, Mode mode,
                    double bn_momentum = 0.1);

/// Eval-mode forward on immutable parameters.
Matrix forward_eval(const AdapterParams& params, const Matrix& batch);

/// Backpropagates d(loss)/d(raw) through the cached train-mode pass.
/// log_tau and siglip_bias gradients are left at zero; the objective
/// supplies them.
AdapterGrads backward(const AdapterParams& params, const BatchOutput& output,
                      const Matrix& grad_raw);

struct Decomposed {
  UnitVector mu;
  double kappa;
};

/// Splits z' = κμ. Rows with norm below 1e-12 map to (e₁, kappa_floor)
/// and log a warning.
Decomposed decompose(const Vector& raw_row, double kappa_floor = 1e-6);

/// Row-wise decompose for a batch. `norm` keeps the unclamped ‖z'‖ that
/// the backward pass needs.
struct DecomposedBatch {
  Matrix mu;
  Vector kappa;
  Vector norm;
};
DecomposedBatch decompose_rows(const Matrix& raw, double kappa_floor);

}  // namespace probemb
