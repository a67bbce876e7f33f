#pragma once

#include <filesystem>

#include "probemb/dataset.hpp"
#include "probemb/types.hpp"

namespace probemb {

/// EMB1 layout: "EMB1", u32 version = 1, u32 d, u64 N, then N·d float32
/// values row-major. All integers and floats little-endian.
inline constexpr std::uint32_t kEmbVersion = 1;
inline constexpr std::size_t kEmbHeaderBytes = 20;

void write_embeddings(const std::filesystem::path& path, const Matrix& matrix);

/// Throws FormatError with "not an EMB1 file", "unsupported version" or
/// "payload size mismatch"; IoError when the file cannot be read.
Matrix read_embeddings(const std::filesystem::path& path);

/// Tab-separated with header `text_row\timage_row` and optionally
/// `\tlevel\ttokens\tgroup`. Malformed lines raise FormatError naming the
/// line number.
PairList read_pairs(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const PairList& pairs);

PairedEmbeddingDataset load_dataset(const std::filesystem::path& text_emb,
                                    const std::filesystem::path& image_emb,
                                    const std::filesystem::path& pairs, bool normalize = true);

}  // namespace probemb
