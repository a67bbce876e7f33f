#include "probemb/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "binary_io.hpp"

namespace probemb {
namespace {

using detail::read_le;
using detail::write_le;

constexpr char kMagic[4] = {'A', 'V', 'L', 'M'};
constexpr std::uint32_t kRoleText = 0;
constexpr std::uint32_t kRoleImage = 1;

void write_tensor(std::ostream& out, const double* data, Eigen::Index n) {
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    write_le<double>(out, data[i]);
  }
}

void write_adapter(std::ostream& out, std::uint32_t role, const AdapterParams& p) {
  write_le(out, role);
  for (int l = 0; l < kAdapterLayers; ++l) {
    const LayerParams& layer = p.layers[l];
    const LayerStats& st = p.stats[l];
    write_tensor(out, layer.weight.data(), layer.weight.size());
    write_tensor(out, layer.bias.data(), layer.bias.size());
    write_tensor(out, layer.bn_scale.data(), layer.bn_scale.size());
    write_tensor(out, layer.bn_shift.data(), layer.bn_shift.size());
    write_tensor(out, st.running_mean.data(), st.running_mean.size());
    write_tensor(out, st.running_var.data(), st.running_var.size());
  }
  write_le(out, p.log_tau);
  write_le(out, p.siglip_bias);
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <typename T>
  T get() {
    T v{};
    if (!read_le(in_, v)) {
      fail("unexpected end of file");
    }
    return v;
  }

  void tensor(double* data, Eigen::Index expected, const char* name) {
    const auto n = get<std::uint64_t>();
    if (n != static_cast<std::uint64_t>(expected)) {
      fail(std::string("tensor length mismatch for ") + name + " (expected " +
           std::to_string(expected) + ", found " + std::to_string(n) + ")");
    }
    for (Eigen::Index i = 0; i < expected; ++i) {
      data[i] = get<double>();
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("'" + path_ + "': " + what);
  }

 private:
  std::istream& in_;
  std::string path_;
};

AdapterParams read_adapter(Reader& r, const AdapterConfig& cfg) {
  // Shapes come from a freshly initialized adapter; values are overwritten.
  AdapterParams p = init_adapter(cfg, 0);
  for (int l = 0; l < kAdapterLayers; ++l) {
    LayerParams& layer = p.layers[l];
    LayerStats& st = p.stats[l];
    r.tensor(layer.weight.data(), layer.weight.size(), "weight");
    r.tensor(layer.bias.data(), layer.bias.size(), "bias");
    r.tensor(layer.bn_scale.data(), layer.bn_scale.size(), "bn_scale");
    r.tensor(layer.bn_shift.data(), layer.bn_shift.size(), "bn_shift");
    r.tensor(st.running_mean.data(), st.running_mean.size(), "running_mean");
    r.tensor(st.running_var.data(), st.running_var.size(), "running_var");
    if ((st.running_var.array() < 0.0).any()) {
      r.fail("invalid configuration: negative running variance");
    }
  }
  p.log_tau = r.get<double>();
  p.siglip_bias = r.get<double>();
  return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  model.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  const AdapterConfig& c = model.config;
  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, kCheckpointVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.d_in));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.d_hidden));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.family));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.variant));
  write_le<double>(out, c.bn_momentum);
  write_le<double>(out, c.kappa_floor);
  const std::uint32_t count =
      (model.text_adapter ? 1u : 0u) + (model.image_adapter ? 1u : 0u);
  write_le(out, count);
  if (model.text_adapter) write_adapter(out, kRoleText, *model.text_adapter);
  if (model.image_adapter) write_adapter(out, kRoleImage, *model.image_adapter);
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  Reader r(in, path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    r.fail("not an AVLM file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }
  AdapterConfig cfg;
  const auto d_in = r.get<std::uint32_t>();
  const auto d_hidden = r.get<std::uint32_t>();
  const auto family = r.get<std::uint32_t>();
  const auto variant = r.get<std::uint32_t>();
  cfg.bn_momentum = r.get<double>();
  cfg.kappa_floor = r.get<double>();
  if (family > static_cast<std::uint32_t>(Family::deterministic) ||
      variant > static_cast<std::uint32_t>(Variant::symmetric) || d_in > (1u << 20) ||
      d_hidden > (1u << 20)) {
    r.fail("invalid configuration (family " + std::to_string(family) + ", variant " +
           std::to_string(variant) + ", d_in " + std::to_string(d_in) + ", d_hidden " +
           std::to_string(d_hidden) + ")");
  }
  cfg.d_in = static_cast<int>(d_in);
  cfg.d_hidden = static_cast<int>(d_hidden);
  cfg.family = static_cast<Family>(family);
  cfg.variant = static_cast<Variant>(variant);
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    r.fail(std::string("invalid configuration: ") + e.what());
  }

  Model model{cfg, std::nullopt, std::nullopt};
  const auto count = r.get<std::uint32_t>();
  const std::uint32_t expected = (adapts_text(cfg.variant) ? 1u : 0u) +
                                 (adapts_image(cfg.variant) ? 1u : 0u);
  if (count != expected) {
    r.fail("invalid configuration: " + std::to_string(count) + " adapters for variant " +
           to_string(cfg.variant));
  }
  // Check the size implied by the header before allocating anything.
  const std::uint64_t widths[] = {d_in, d_hidden, d_hidden,
                                  static_cast<std::uint64_t>(cfg.d_out())};
  std::uint64_t per_adapter = 4 + 16;
  for (int l = 0; l < kAdapterLayers; ++l) {
    per_adapter += 6 * 8 + 8 * (widths[l] * widths[l + 1] + 5 * widths[l + 1]);
  }
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
  in.seekg(here);
  if (remaining < per_adapter * count) {
    r.fail("unexpected end of file (header implies " + std::to_string(per_adapter * count) +
           " more bytes, file has " + std::to_string(remaining) + ")");
  }
  for (std::uint32_t a = 0; a < count; ++a) {
    const auto role = r.get<std::uint32_t>();
    if (role == kRoleText && adapts_text(cfg.variant) && !model.text_adapter) {
      model.text_adapter = read_adapter(r, cfg);
    } else if (role == kRoleImage && adapts_image(cfg.variant) && !model.image_adapter) {
      model.image_adapter = read_adapter(r, cfg);
    } else {
      r.fail("invalid configuration: unexpected adapter role " + std::to_string(role));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    r.fail("trailing bytes after the last tensor");
  }
  return model;
}

}  // namespace probemb
