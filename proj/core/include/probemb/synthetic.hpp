#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "probemb/dataset.hpp"

namespace probemb {

/// Generator for a hierarchical caption dataset with known uncertainty.
///
/// Objects are the leaves of a concept tree with `levels - 1` concept
/// levels: root concepts are uniform on the sphere, and each child (concept
/// or object) is drawn vMF(parent, kappa_tree). Each object gets one image,
/// vMF(object, kappa_image), and `captions_per_object` captions; caption j
/// describes the object at level j mod `levels`. A level-ℓ caption is drawn
/// vMF(normalize(anchor + generic_offset[ℓ]·g), kappa_text_by_level[ℓ])
/// where the anchor is the object's level-ℓ ancestor (the object itself at
/// the last level) and g is one direction shared by all captions. Level 0 is
/// the most general description.
struct SynthConfig {
  int n_objects = 2000;
  int heldout_objects = 500;
  int captions_per_object = 4;
  int levels = 4;
  int dim = 32;
  double kappa_image = 200.0;
  /// Indexed by level; strictly increasing, i.e. strictly decreasing with
  /// abstraction.
  std::vector<double> kappa_text_by_level = {128.0, 192.0, 256.0, 320.0};
  int branching = 5;
  double kappa_tree = 30.0;
  /// Indexed by level; pull toward the shared generic direction.
  std::vector<double> generic_offset = {1.5, 1.0, 0.5, 0.0};
  std::uint64_t seed = 0;

  /// Refills kappa_text_by_level (128 + 64ℓ) and generic_offset (linear from
  /// 1.5 down to 0) for the current number of levels.
  void reset_level_schedules();
  void validate() const;
};

struct SyntheticData {
  PairedEmbeddingDataset train;
  PairedEmbeddingDataset heldout;
  Matrix train_objects;
  Matrix heldout_objects;
};

SyntheticData generate_synthetic(const SynthConfig& config);

/// Writes text.emb, image.emb, pairs.tsv, the heldout_* counterparts and
/// manifest.json into `out_dir` (created if missing).
void write_synthetic(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace probemb
