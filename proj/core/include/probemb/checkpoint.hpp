#pragma once

#include <filesystem>

#include "probemb/model.hpp"

namespace probemb {

/// AVLM layout (little-endian):
///   "AVLM", u32 version = 1
///   u32 d_in, u32 d_hidden, u32 family, u32 variant
///   f64 bn_momentum, f64 kappa_floor
///   u32 adapter count, then per adapter:
///     u32 role (0 text, 1 image)
///     per layer 0..2: weight, bias, bn_scale, bn_shift, running_mean,
///       running_var, each as u64 length followed by f64 values
///     f64 log_tau, f64 siglip_bias
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Model& model);

/// Throws FormatError naming the defect: "not an AVLM file",
/// "unsupported version", "unexpected end of file", "tensor length
/// mismatch", "invalid configuration" or "trailing bytes".
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace probemb
