#include "probemb/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "probemb/objective.hpp"

namespace probemb {

std::string to_string(LossKind k) { return k == LossKind::infonce ? "infonce" : "siglip"; }

LossKind loss_from_string(const std::string& s) {
  if (s == "infonce") return LossKind::infonce;
  if (s == "siglip") return LossKind::siglip;
  throw DomainError("unknown loss '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0) || !(lr_min > 0.0) || lr_min > lr0) {
    throw DomainError("TrainConfig: need 0 < lr_min <= lr0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw DomainError("TrainConfig: momentum must lie in [0, 1)");
  }
  if (batch_size < 2) {
    throw DomainError("TrainConfig: batch_size must be >= 2");
  }
  if (epochs < 0) {
    throw DomainError("TrainConfig: epochs must be >= 0");
  }
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0, double lr_min) {
  if (total_steps < 1 || step < 0 || step > total_steps) {
    throw DomainError("cosine_lr: need 0 <= step <= total_steps and total_steps >= 1");
  }
  if (step == total_steps) {
    return lr_min;
  }
  const double phase = std::numbers::pi * static_cast<double>(step) /
                       static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw DomainError("sgd_momentum_step: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= lr * velocity[i];
  }
}

void sgd_momentum_step(AdapterParams& params, const AdapterGrads& grads, AdapterGrads& velocity,
                       double lr, double momentum) {
  auto p = params.trainable();
  const auto g = grads.trainable();
  auto v = velocity.trainable();
  if (p.size() != g.size() || p.size() != v.size()) {
    throw DomainError("sgd_momentum_step: tensor counts differ");
  }
  for (std::size_t t = 0; t < p.size(); ++t) {
    sgd_momentum_step(p[t], g[t], v[t], lr, momentum);
  }
}

StepGradients loss_and_gradients(Model& model, LossKind loss, const Matrix& text_batch,
                                 const Matrix& image_batch) {
  if (text_batch.rows() != image_batch.rows()) {
    throw DomainError("loss_and_gradients: text and image batches differ in size");
  }
  const AdapterConfig& cfg = model.config;
  std::optional<BatchOutput> text_out;
  std::optional<BatchOutput> image_out;
  if (model.text_adapter) {
    text_out = forward(*model.text_adapter, text_batch, Mode::train, cfg.bn_momentum);
  }
  if (model.image_adapter) {
    image_out = forward(*model.image_adapter, image_batch, Mode::train, cfg.bn_momentum);
  }
  const Matrix& text = text_out ? text_out->raw : text_batch;
  const Matrix& image = image_out ? image_out->raw : image_batch;

  const LikelihoodMatrix L{variant_forward(cfg.family, cfg.variant, text, image, cfg.kappa_floor),
                           kernel_for(cfg.family)};
  const AdapterParams& primary = model.primary();
  const LossValue lv = loss == LossKind::infonce
                           ? infonce(L, primary.log_tau)
                           : siglip_loss(L, primary.log_tau, primary.siglip_bias);
  const VariantGrads vg =
      variant_backward(cfg.family, cfg.variant, text, image, lv.grad_L, cfg.kappa_floor);

  StepGradients out;
  out.loss = lv.loss;
  if (text_out) {
    out.text = backward(*model.text_adapter, *text_out, vg.d_text);
  }
  if (image_out) {
    out.image = backward(*model.image_adapter, *image_out, vg.d_image);
  }
  AdapterGrads& pg = out.text ? *out.text : *out.image;
  pg.log_tau = lv.grad_log_tau;
  pg.siglip_bias = loss == LossKind::siglip ? lv.grad_bias : 0.0;
  return out;
}

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<std::int64_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  }
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const AdapterConfig& adapter_config,
                  const PairedEmbeddingDataset& dataset) {
  config.validate();
  adapter_config.validate();
  dataset.validate();
  if (dataset.dim() != adapter_config.d_in) {
    throw DomainError("train: dataset dimension " + std::to_string(dataset.dim()) +
                      " does not match adapter input dimension " +
                      std::to_string(adapter_config.d_in));
  }
  if (dataset.pairs.size() < 2) {
    throw DomainError("train: need at least two pairs");
  }
  const auto start = std::chrono::steady_clock::now();

  TrainResult result{Model::init(adapter_config, config.seed), {}};
  Model& model = result.model;
  TrainHistory& hist = result.history;
  if (config.epochs == 0) {
    return result;
  }

  const std::size_t n = dataset.pairs.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  std::size_t steps_per_epoch = n / bs;
  if (n % bs >= 2) {
    ++steps_per_epoch;
  }
  const std::int64_t total =
      static_cast<std::int64_t>(steps_per_epoch) * static_cast<std::int64_t>(config.epochs);

  std::optional<AdapterGrads> v_text;
  std::optional<AdapterGrads> v_image;
  if (model.text_adapter) v_text = AdapterGrads::zeros_like(*model.text_adapter);
  if (model.image_adapter) v_image = AdapterGrads::zeros_like(*model.image_adapter);

  // Separate stream from the one that initialized the weights.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::int64_t> text_rows;
  std::vector<std::int64_t> image_rows;

  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      std::shuffle(order.begin(), order.end(), rng);
    }
    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b, ++step) {
      const std::size_t lo = b * bs;
      const std::size_t hi = std::min(n, lo + bs);
      text_rows.clear();
      image_rows.clear();
      for (std::size_t i = lo; i < hi; ++i) {
        text_rows.push_back(dataset.pairs[order[i]].text_row);
        image_rows.push_back(dataset.pairs[order[i]].image_row);
      }
      const Matrix tb = gather_rows(dataset.text_embs, text_rows);
      const Matrix ib = gather_rows(dataset.image_embs, image_rows);
      const StepGradients sg = loss_and_gradients(model, config.loss, tb, ib);

      const double lr = cosine_lr(step, total, config.lr0, config.lr_min);
      if (sg.text) {
        sgd_momentum_step(*model.text_adapter, *sg.text, *v_text, lr, config.momentum);
      }
      if (sg.image) {
        sgd_momentum_step(*model.image_adapter, *sg.image, *v_image, lr, config.momentum);
      }
      if (!std::isfinite(sg.loss) || (model.text_adapter && !model.text_adapter->all_finite()) ||
          (model.image_adapter && !model.image_adapter->all_finite())) {
        throw NumericalError("train: non-finite loss or parameters at epoch " +
                             std::to_string(epoch) + ", step " + std::to_string(step) +
                             " (loss " + std::to_string(sg.loss) + ", lr " +
                             std::to_string(lr) + ")");
      }
      hist.step_loss.push_back(sg.loss);
      hist.final_lr = lr;
      epoch_sum += sg.loss;
    }
    hist.epoch_loss.push_back(epoch_sum / static_cast<double>(steps_per_epoch));
    spdlog::info("epoch {}/{}: mean loss {:.6f}, tau {:.4f}", epoch + 1, config.epochs,
                 hist.epoch_loss.back(), std::exp(model.primary().log_tau));
  }
  hist.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace probemb
