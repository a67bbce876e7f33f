#include "probemb/model.hpp"

#include <cmath>

#include "probemb/objective.hpp"

namespace probemb {

std::string to_string(Family f) {
  switch (f) {
    case Family::vmf:
      return "vmf";
    case Family::ps:
      return "ps";
    case Family::gauss:
      return "gauss";
    case Family::deterministic:
      return "det";
  }
  return "unknown";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::asym_text:
      return "asym-text";
    case Variant::asym_image:
      return "asym-image";
    case Variant::symmetric:
      return "sym";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "vmf") return Family::vmf;
  if (s == "ps") return Family::ps;
  if (s == "gauss") return Family::gauss;
  if (s == "det" || s == "deterministic") return Family::deterministic;
  throw DomainError("unknown distribution family '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
  if (s == "asym-text" || s == "asym_text") return Variant::asym_text;
  if (s == "asym-image" || s == "asym_image") return Variant::asym_image;
  if (s == "sym" || s == "symmetric") return Variant::symmetric;
  throw DomainError("unknown variant '" + s + "'");
}

bool adapts_text(Variant v) { return v != Variant::asym_image; }
bool adapts_image(Variant v) { return v != Variant::asym_text; }

Model Model::init(const AdapterConfig& config, std::uint64_t seed) {
  config.validate();
  Model m{config, std::nullopt, std::nullopt};
  if (adapts_text(config.variant)) {
    m.text_adapter = init_adapter(config, seed);
  }
  if (adapts_image(config.variant)) {
    m.image_adapter = init_adapter(config, seed + 1);
  }
  return m;
}

AdapterParams& Model::primary() { return text_adapter ? *text_adapter : *image_adapter; }
const AdapterParams& Model::primary() const {
  return text_adapter ? *text_adapter : *image_adapter;
}

void Model::validate() const {
  config.validate();
  if (text_adapter.has_value() != adapts_text(config.variant) ||
      image_adapter.has_value() != adapts_image(config.variant)) {
    throw DomainError("Model: adapters do not match variant " + to_string(config.variant));
  }
}

Encoded encode(const Model& model, const Matrix& texts, const Matrix& images) {
  const int d = model.config.d_in;
  if (texts.cols() != d || images.cols() != d) {
    throw DomainError("encode: model expects dimension " + std::to_string(d) + ", got text " +
                      std::to_string(texts.cols()) + " and image " +
                      std::to_string(images.cols()));
  }
  Encoded enc;
  enc.text = model.text_adapter ? forward_eval(*model.text_adapter, texts) : texts;
  enc.image = model.image_adapter ? forward_eval(*model.image_adapter, images) : images;
  return enc;
}

Matrix score_rows(const Model& model, const Encoded& enc, Eigen::Index begin,
                  Eigen::Index count) {
  if (begin < 0 || count < 1 || begin + count > enc.text.rows()) {
    throw DomainError("score_rows: row range out of bounds");
  }
  return variant_forward(model.config.family, model.config.variant,
                         enc.text.middleRows(begin, count), enc.image, model.config.kappa_floor);
}

Vector uncertainty_of(const Model& model, const Matrix& raw) {
  Vector out(raw.rows());
  const Family f = model.config.family;
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    switch (f) {
      case Family::vmf:
      case Family::ps:
        out[r] = -std::max(raw.row(r).norm(), model.config.kappa_floor);
        break;
      case Family::gauss: {
        const Eigen::Index d = raw.cols() / 2;
        out[r] = raw.row(r).tail(d).array().exp().mean();
        break;
      }
      case Family::deterministic:
        out[r] = 0.0;
        break;
    }
  }
  return out;
}

}  // namespace probemb
