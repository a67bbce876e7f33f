#include "probemb/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "json.hpp"
#include "probemb/directional.hpp"
#include "probemb/embedding_io.hpp"

namespace probemb {
namespace {

UnitVector draw_vmf(const Vector& mean, double kappa, std::mt19937_64& rng) {
  return sample_vmf(VmfParams{UnitVector::normalized(mean), kappa}, rng);
}

std::string concept_label(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%02d", index);
  return buf;
}

}  // namespace

void SynthConfig::reset_level_schedules() {
  kappa_text_by_level.clear();
  generic_offset.clear();
  for (int l = 0; l < levels; ++l) {
    kappa_text_by_level.push_back(128.0 + 64.0 * l);
    generic_offset.push_back(levels == 1 ? 0.0 : 1.5 * (levels - 1 - l) / (levels - 1));
  }
}

void SynthConfig::validate() const {
  if (n_objects < 1 || heldout_objects < 0) {
    throw DomainError("SynthConfig: need n_objects >= 1 and heldout_objects >= 0");
  }
  if (captions_per_object < 1 || levels < 1) {
    throw DomainError("SynthConfig: captions_per_object and levels must be >= 1");
  }
  if (dim < 2) {
    throw DomainError("SynthConfig: dim must be >= 2");
  }
  if (!(kappa_image > 0.0) || !(kappa_tree > 0.0)) {
    throw DomainError("SynthConfig: kappa_image and kappa_tree must be positive");
  }
  if (branching < 2) {
    throw DomainError("SynthConfig: branching must be >= 2");
  }
  if (static_cast<int>(kappa_text_by_level.size()) != levels ||
      static_cast<int>(generic_offset.size()) != levels) {
    throw DomainError("SynthConfig: kappa_text_by_level and generic_offset need one entry per level");
  }
  for (int l = 0; l < levels; ++l) {
    if (!(kappa_text_by_level[l] > 0.0)) {
      throw DomainError("SynthConfig: text concentrations must be positive");
    }
    if (l > 0 && !(kappa_text_by_level[l] > kappa_text_by_level[l - 1])) {
      throw DomainError(
          "SynthConfig: kappa_text_by_level must strictly increase from level 0 (most general)");
    }
    if (!std::isfinite(generic_offset[l]) || generic_offset[l] < 0.0) {
      throw DomainError("SynthConfig: generic offsets must be finite and >= 0");
    }
  }
}

SyntheticData generate_synthetic(const SynthConfig& c) {
  c.validate();
  std::mt19937_64 rng(c.seed);
  const int total = c.n_objects + c.heldout_objects;
  const int d = c.dim;
  const Vector generic = sample_uniform_sphere(d, rng).values();

  // Concept levels 0 .. levels-2; objects form level levels-1.
  const int n_concept_levels = c.levels - 1;
  std::vector<int> count(n_concept_levels);
  for (int l = 0; l < n_concept_levels; ++l) {
    const double denom = std::pow(static_cast<double>(c.branching), c.levels - 1 - l);
    count[l] = std::max(1, static_cast<int>(std::ceil(total / denom)));
  }
  std::vector<Matrix> concepts(n_concept_levels);
  std::vector<std::vector<int>> parent(n_concept_levels);
  for (int l = 0; l < n_concept_levels; ++l) {
    concepts[l].resize(count[l], d);
    parent[l].resize(count[l], -1);
    for (int i = 0; i < count[l]; ++i) {
      if (l == 0) {
        concepts[l].row(i) = sample_uniform_sphere(d, rng).values().transpose();
      } else {
        parent[l][i] = i % count[l - 1];
        concepts[l].row(i) =
            draw_vmf(concepts[l - 1].row(parent[l][i]).transpose(), c.kappa_tree, rng)
                .values()
                .transpose();
      }
    }
  }

  // Object parents: balanced over the finest concept level, shuffled.
  std::vector<int> object_parent(total, -1);
  Matrix objects(total, d);
  if (n_concept_levels > 0) {
    const int finest = count[n_concept_levels - 1];
    for (int o = 0; o < total; ++o) object_parent[o] = o % finest;
    std::shuffle(object_parent.begin(), object_parent.end(), rng);
    for (int o = 0; o < total; ++o) {
      objects.row(o) = draw_vmf(concepts[n_concept_levels - 1].row(object_parent[o]).transpose(),
                                c.kappa_tree, rng)
                           .values()
                           .transpose();
    }
  } else {
    for (int o = 0; o < total; ++o) {
      objects.row(o) = sample_uniform_sphere(d, rng).values().transpose();
    }
  }

  // ancestor[o][l]: concept index of object o at level l.
  std::vector<std::vector<int>> ancestor(total, std::vector<int>(n_concept_levels, -1));
  for (int o = 0; o < total; ++o) {
    if (n_concept_levels == 0) break;
    ancestor[o][n_concept_levels - 1] = object_parent[o];
    for (int l = n_concept_levels - 1; l > 0; --l) {
      ancestor[o][l - 1] = parent[l][ancestor[o][l]];
    }
  }

  Matrix images(total, d);
  for (int o = 0; o < total; ++o) {
    images.row(o) = draw_vmf(objects.row(o).transpose(), c.kappa_image, rng).values().transpose();
  }

  const int cpo = c.captions_per_object;
  Matrix texts(static_cast<Eigen::Index>(total) * cpo, d);
  std::vector<TextMeta> meta(static_cast<std::size_t>(total) * cpo);
  std::uniform_int_distribution<int> token_noise(0, 2);
  for (int o = 0; o < total; ++o) {
    for (int j = 0; j < cpo; ++j) {
      const int level = j % c.levels;
      const Vector anchor = level == c.levels - 1
                                ? Vector(objects.row(o).transpose())
                                : Vector(concepts[level].row(ancestor[o][level]).transpose());
      const Vector mean = anchor.normalized() + c.generic_offset[level] * generic;
      const Eigen::Index row = static_cast<Eigen::Index>(o) * cpo + j;
      texts.row(row) = draw_vmf(mean, c.kappa_text_by_level[level], rng).values().transpose();
      meta[static_cast<std::size_t>(row)] = {
          level, 2 + 3 * level + token_noise(rng),
          n_concept_levels > 0 ? concept_label(ancestor[o][0]) : std::string("all")};
    }
  }

  auto split = [&](int first, int n) {
    PairList pl;
    pl.metadata.emplace();
    for (int o = 0; o < n; ++o) {
      for (int j = 0; j < cpo; ++j) {
        const std::int64_t row = static_cast<std::int64_t>(o) * cpo + j;
        pl.pairs.push_back({row, o});
        pl.metadata->push_back(meta[static_cast<std::size_t>((first + o) * cpo + j)]);
      }
    }
    return make_dataset(Matrix(texts.middleRows(static_cast<Eigen::Index>(first) * cpo,
                                                static_cast<Eigen::Index>(n) * cpo)),
                        Matrix(images.middleRows(first, n)), std::move(pl), true);
  };

  SyntheticData out{split(0, c.n_objects), split(c.n_objects, c.heldout_objects),
                    objects.topRows(c.n_objects), objects.bottomRows(c.heldout_objects)};
  return out;
}

void write_synthetic(const SynthConfig& config, const std::filesystem::path& out_dir) {
  const SyntheticData data = generate_synthetic(config);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create directory '" + out_dir.string() + "': " + ec.message());
  }
  auto write_split = [&](const PairedEmbeddingDataset& ds, const std::string& prefix) {
    write_embeddings(out_dir / (prefix + "text.emb"), ds.text_embs);
    write_embeddings(out_dir / (prefix + "image.emb"), ds.image_embs);
    write_pairs(out_dir / (prefix + "pairs.tsv"), PairList{ds.pairs, ds.metadata});
  };
  write_split(data.train, "");
  write_split(data.heldout, "heldout_");

  nlohmann::ordered_json m;
  m["generator"] = "hierarchical-vmf";
  m["n_objects"] = config.n_objects;
  m["heldout_objects"] = config.heldout_objects;
  m["captions_per_object"] = config.captions_per_object;
  m["levels"] = config.levels;
  m["dim"] = config.dim;
  m["kappa_image"] = config.kappa_image;
  m["kappa_text_by_level"] = config.kappa_text_by_level;
  m["branching"] = config.branching;
  m["kappa_tree"] = config.kappa_tree;
  m["generic_offset"] = config.generic_offset;
  m["seed"] = config.seed;
  m["files"] = {{"train", {"text.emb", "image.emb", "pairs.tsv"}},
                {"heldout", {"heldout_text.emb", "heldout_image.emb", "heldout_pairs.tsv"}}};
  const auto path = out_dir / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << m.dump(2) << "\n";
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

}  // namespace probemb
