#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "probemb/adapter.hpp"
#include "probemb/dataset.hpp"
#include "probemb/model.hpp"

namespace probemb {

enum class LossKind { infonce, siglip };

std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& s);

struct TrainConfig {
  double lr0 = 1e-2;
  double lr_min = 1e-6;
  double momentum = 0.9;
  int batch_size = 256;
  int epochs = 10;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::infonce;
  bool shuffle = true;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;
  double final_lr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Model model;
  TrainHistory history;
};

/// lr_min + (lr0 - lr_min)(1 + cos(π step / total)) / 2.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0, double lr_min);

/// Classic momentum: v ← m v + g, p ← p - lr v.
void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum);

/// Same update over every trainable tensor; `velocity` has the gradient layout.
void sgd_momentum_step(AdapterParams& params, const AdapterGrads& grads, AdapterGrads& velocity,
                       double lr, double momentum);

struct StepGradients {
  double loss = 0.0;
  std::optional<AdapterGrads> text;
  std::optional<AdapterGrads> image;
};

/// One train-mode forward and backward pass on a batch of aligned rows.
/// Updates batch-norm running statistics as a side effect. Temperature and
/// bias gradients land in the primary adapter's gradients.
StepGradients loss_and_gradients(Model& model, LossKind loss, const Matrix& text_batch,
                                 const Matrix& image_batch);

/// Mini-batch training. Each epoch reshuffles the pairs with the seeded
/// generator and drops a trailing batch of fewer than two pairs.
TrainResult train(const TrainConfig& config, const AdapterConfig& adapter_config,
                  const PairedEmbeddingDataset& dataset);

}  // namespace probemb
