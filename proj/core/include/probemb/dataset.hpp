#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "probemb/types.hpp"

namespace probemb {

struct Pair {
  std::int64_t text_row;
  std::int64_t image_row;
};

/// Optional annotation of the text in a pair.
struct TextMeta {
  int level = 0;
  int tokens = 0;
  std::string group;
};

struct PairList {
  std::vector<Pair> pairs;
  // Parallel to `pairs` when present.
  std::optional<std::vector<TextMeta>> metadata;
};

/// Aligned text and image embeddings plus the pairing between them.
struct PairedEmbeddingDataset {
  Matrix text_embs;
  Matrix image_embs;
  std::vector<Pair> pairs;
  std::optional<std::vector<TextMeta>> metadata;

  int dim() const { return static_cast<int>(text_embs.cols()); }
  /// Throws DomainError on a dimension mismatch, an out-of-range pair or
  /// metadata of the wrong length.
  void validate() const;
};

/// Projects every row onto the unit sphere. Zero rows raise DomainError.
void normalize_rows_inplace(Matrix& m);

/// Assembles and validates a dataset.
PairedEmbeddingDataset make_dataset(Matrix text_embs, Matrix image_embs, PairList pairs,
                                    bool normalize = true);

}  // namespace probemb
