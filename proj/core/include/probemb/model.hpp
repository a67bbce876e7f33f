#pragma once

#include <cstdint>
#include <optional>

#include "probemb/adapter.hpp"
#include "probemb/types.hpp"

namespace probemb {

bool adapts_text(Variant v);
bool adapts_image(Variant v);

/// A trained configuration: asym_text carries a text adapter, asym_image an
/// image adapter, symmetric both. Temperature and SigLIP bias are read from
/// the text adapter when there is one.
struct Model {
  AdapterConfig config;
  std::optional<AdapterParams> text_adapter;
  std::optional<AdapterParams> image_adapter;

  static Model init(const AdapterConfig& config, std::uint64_t seed);

  AdapterParams& primary();
  const AdapterParams& primary() const;
  void validate() const;
};

/// Adapter outputs (or the inputs themselves for the unadapted side),
/// computed once in eval mode.
struct Encoded {
  Matrix text;
  Matrix image;
};

Encoded encode(const Model& model, const Matrix& texts, const Matrix& images);

/// Scores of texts [begin, begin + count) against every image.
Matrix score_rows(const Model& model, const Encoded& enc, Eigen::Index begin,
                  Eigen::Index count);

/// Per-row uncertainty of a distribution-valued side: -κ for vmf/ps, mean
/// variance for gauss, 0 for deterministic.
Vector uncertainty_of(const Model& model, const Matrix& raw);

}  // namespace probemb
