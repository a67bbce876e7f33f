#include "probemb/adapter.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace probemb {
namespace {

constexpr double kDegenerateNorm = 1e-12;

std::span<double> span_of(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> span_of(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<const double> span_of(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

template <typename Layers, typename Out>
void collect_layers(Layers& layers, Out& out) {
  for (auto& layer : layers) {
    out.push_back(span_of(layer.weight));
    out.push_back(span_of(layer.bias));
    out.push_back(span_of(layer.bn_scale));
    out.push_back(span_of(layer.bn_shift));
  }
}

std::vector<int> layer_widths(const AdapterConfig& c) {
  return {c.d_in, c.d_hidden, c.d_hidden, c.d_out()};
}

}  // namespace

void AdapterConfig::validate() const {
  if (d_in < 2) {
    throw DomainError("AdapterConfig: d_in must be >= 2");
  }
  if (d_hidden < 1) {
    throw DomainError("AdapterConfig: d_hidden must be >= 1");
  }
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) {
    throw DomainError("AdapterConfig: bn_momentum must lie in (0, 1)");
  }
  if (!(kappa_floor > 0.0)) {
    throw DomainError("AdapterConfig: kappa_floor must be positive");
  }
  if (family == Family::gauss && variant != Variant::asym_text) {
    throw DomainError("AdapterConfig: the gauss family supports only the asym_text variant");
  }
}

std::vector<std::span<double>> AdapterParams::trainable() {
  std::vector<std::span<double>> out;
  collect_layers(layers, out);
  out.emplace_back(&log_tau, 1);
  out.emplace_back(&siglip_bias, 1);
  return out;
}

std::vector<std::span<const double>> AdapterParams::trainable() const {
  std::vector<std::span<const double>> out;
  collect_layers(layers, out);
  out.emplace_back(&log_tau, 1);
  out.emplace_back(&siglip_bias, 1);
  return out;
}

bool AdapterParams::all_finite() const {
  for (auto s : trainable()) {
    for (double v : s) {
      if (!std::isfinite(v)) {
        return false;
      }
    }
  }
  for (const auto& st : stats) {
    if (!st.running_mean.allFinite() || !st.running_var.allFinite()) {
      return false;
    }
  }
  return true;
}

AdapterGrads AdapterGrads::zeros_like(const AdapterParams& params) {
  AdapterGrads g;
  for (const auto& layer : params.layers) {
    g.layers.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                        Vector::Zero(layer.bias.size()), Vector::Zero(layer.bn_scale.size()),
                        Vector::Zero(layer.bn_shift.size())});
  }
  return g;
}

std::vector<std::span<double>> AdapterGrads::trainable() {
  std::vector<std::span<double>> out;
  collect_layers(layers, out);
  out.emplace_back(&log_tau, 1);
  out.emplace_back(&siglip_bias, 1);
  return out;
}

std::vector<std::span<const double>> AdapterGrads::trainable() const {
  std::vector<std::span<const double>> out;
  collect_layers(layers, out);
  out.emplace_back(&log_tau, 1);
  out.emplace_back(&siglip_bias, 1);
  return out;
}

AdapterParams init_adapter(const AdapterConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const auto widths = layer_widths(config);
  AdapterParams p;
  for (int l = 0; l < kAdapterLayers; ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / in));
    LayerParams layer{Matrix(out, in), Vector::Zero(out), Vector::Ones(out), Vector::Zero(out)};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = normal(rng);
    }
    p.layers.push_back(std::move(layer));
    p.stats.push_back({Vector::Zero(out), Vector::Ones(out)});
  }
  return p;
}

namespace {

void check_batch(const AdapterParams& params, const Matrix& batch) {
  if (params.layers.size() != kAdapterLayers) {
    throw DomainError("adapter: parameters are not initialized");
  }
  if (batch.cols() != params.layers.front().weight.cols()) {
    throw DomainError("adapter: batch has " + std::to_string(batch.cols()) +
                      " columns, adapter expects " +
                      std::to_string(params.layers.front().weight.cols()));
  }
}

}  // namespace

BatchOutput forward(AdapterParams& params, const Matrix& batch, Mode mode, double bn_momentum) {
  if (mode == Mode::eval) {
    return {forward_eval(params, batch), std::nullopt};
  }
  check_batch(params, batch);
  const Eigen::Index rows = batch.rows();
  if (rows < 2) {
    throw DomainError("adapter: train-mode forward needs a batch of at least 2 rows");
  }
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) {
    throw DomainError("adapter: bn_momentum must lie in (0, 1)");
  }
  const double momentum = bn_momentum;
  std::vector<LayerCache> cache;
  cache.reserve(kAdapterLayers);
  Matrix x = batch;
  for (int l = 0; l < kAdapterLayers; ++l) {
    const LayerParams& layer = params.layers[l];
    LayerStats& stats = params.stats[l];
    Matrix a = x * layer.weight.transpose();
    a.rowwise() += layer.bias.transpose();

    const RowVector mean = a.colwise().mean();
    Matrix centered = a.rowwise() - mean;
    const RowVector var = centered.array().square().colwise().mean();
    const Vector inv_std = (var.transpose().array() + kBatchNormEps).rsqrt().matrix();
    Matrix xhat = centered * inv_std.asDiagonal();
    Matrix y = xhat * layer.bn_scale.asDiagonal();
    y.rowwise() += layer.bn_shift.transpose();

    const double unbias = static_cast<double>(rows) / static_cast<double>(rows - 1);
    stats.running_mean = (1.0 - momentum) * stats.running_mean + momentum * mean.transpose();
    stats.running_var =
        (1.0 - momentum) * stats.running_var + momentum * unbias * var.transpose();

    cache.push_back({std::move(x), std::move(xhat), inv_std, y});
    x = (l + 1 < kAdapterLayers) ? Matrix(y.cwiseMax(0.0)) : y;
  }
  return {std::move(x), std::move(cache)};
}

Matrix forward_eval(const AdapterParams& params, const Matrix& batch) {
  check_batch(params, batch);
  if (batch.rows() < 1) {
    throw DomainError("adapter: eval-mode forward needs at least one row");
  }
  Matrix x = batch;
  for (int l = 0; l < kAdapterLayers; ++l) {
    const LayerParams& layer = params.layers[l];
    const LayerStats& stats = params.stats[l];
    Matrix a = x * layer.weight.transpose();
    a.rowwise() += layer.bias.transpose();
    const Vector scale =
        (layer.bn_scale.array() * (stats.running_var.array() + kBatchNormEps).rsqrt()).matrix();
    const Vector shift = layer.bn_shift - (stats.running_mean.array() * scale.array()).matrix();
    a = a * scale.asDiagonal();
    a.rowwise() += shift.transpose();
    x = (l + 1 < kAdapterLayers) ? Matrix(a.cwiseMax(0.0)) : a;
  }
  return x;
}

AdapterGrads backward(const AdapterParams& params, const BatchOutput& output,
                      const Matrix& grad_raw) {
  if (!output.cache) {
    throw DomainError("adapter: backward requires a train-mode forward cache");
  }
  const auto& cache = *output.cache;
  if (grad_raw.rows() != output.raw.rows() || grad_raw.cols() != output.raw.cols()) {
    throw DomainError("adapter: gradient shape does not match the forward output");
  }
  AdapterGrads grads = AdapterGrads::zeros_like(params);
  const double rows = static_cast<double>(grad_raw.rows());
  Matrix g = grad_raw;
  for (int l = kAdapterLayers - 1; l >= 0; --l) {
    const LayerParams& layer = params.layers[l];
    const LayerCache& c = cache[l];
    if (l + 1 < kAdapterLayers) {
      g = (c.output.array() > 0.0).select(g, 0.0);
    }
    LayerParams& gl = grads.layers[l];
    gl.bn_scale = (g.array() * c.xhat.array()).colwise().sum().transpose();
    gl.bn_shift = g.colwise().sum().transpose();

    const Matrix g_xhat = g * layer.bn_scale.asDiagonal();
    const RowVector sum_g = g_xhat.colwise().sum();
    const RowVector sum_gx = (g_xhat.array() * c.xhat.array()).colwise().sum();
    Matrix g_a = (rows * g_xhat).rowwise() - sum_g;
    g_a -= c.xhat * sum_gx.asDiagonal();
    g_a = g_a * (c.inv_std / rows).asDiagonal();

    gl.weight = g_a.transpose() * c.input;
    gl.bias = g_a.colwise().sum().transpose();
    if (l > 0) {
      g = g_a * layer.weight;
    }
  }
  return grads;
}

Decomposed decompose(const Vector& raw_row, double kappa_floor) {
  const double n = raw_row.norm();
  if (!(n > kDegenerateNorm)) {
    spdlog::warn("decompose: degenerate adapter output (norm {}), using e1 with kappa {}", n,
                 kappa_floor);
    Vector e1 = Vector::Zero(raw_row.size());
    e1[0] = 1.0;
    return {UnitVector::from_unit(std::move(e1)), kappa_floor};
  }
  return {UnitVector::normalized(raw_row), std::max(n, kappa_floor)};
}

DecomposedBatch decompose_rows(const Matrix& raw, double kappa_floor) {
  DecomposedBatch out{Matrix(raw.rows(), raw.cols()), Vector(raw.rows()), Vector(raw.rows())};
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double n = raw.row(r).norm();
    out.norm[r] = n;
    if (!(n > kDegenerateNorm)) {
      spdlog::warn("decompose: degenerate adapter output in row {}, using e1", r);
      out.mu.row(r).setZero();
      out.mu(r, 0) = 1.0;
      out.kappa[r] = kappa_floor;
    } else {
      out.mu.row(r) = raw.row(r) / n;
      out.kappa[r] = std::max(n, kappa_floor);
    }
  }
  return out;
}

}  // namespace probemb
