#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "probemb/dataset.hpp"
#include "probemb/inference.hpp"
#include "probemb/model.hpp"

namespace probemb {

struct GroupStat {
  double mean_uncertainty = 0.0;
  double mean_log_likelihood = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  double overall_recall1_t2i = 0.0;
  double overall_recall1_i2t = 0.0;
  std::vector<double> per_bin_recall_t2i;
  std::vector<double> per_bin_recall_i2t;
  double spearman_t2i = 0.0;
  double spearman_i2t = 0.0;
  double r2_t2i = 0.0;
  double r2_i2t = 0.0;
  int n_bins = 0;
  // Keys are "level=<n>", "tokens=<lo>-<hi>" and "group=<label>".
  std::optional<std::map<std::string, GroupStat>> group_stats;
};

/// Fraction of rankings whose ground-truth candidate is within the top k.
double recall_at_k(const std::vector<Ranking>& rankings,
                   const std::vector<Eigen::Index>& ground_truth, int k);

/// Equal-count quantile bins by ascending uncertainty (stable on ties).
/// Bin 0 holds the least uncertain values.
std::vector<int> bin_by_uncertainty(const std::vector<double>& uncertainties, int n_bins);

/// Rank correlation with average ranks for ties. Constant input on either
/// side yields 0 and a logged warning.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// R² of the least-squares line ys ~ xs, clamped to [0, 1]. Constant ys
/// gives 1 (the constant line fits exactly); constant xs is an error.
double r_squared(const std::vector<double>& xs, const std::vector<double>& ys);

/// Per-bin recall, S and R² from per-query hits. `uncertainty[q]` is the
/// uncertainty that bins query q in both directions.
EvalReport report_from_hits(const std::vector<double>& uncertainty,
                            const std::vector<bool>& hit_t2i, const std::vector<bool>& hit_i2t,
                            int n_bins);

/// Evaluates every pair as a t2i query (its text against all images) and
/// an i2t query (its image against all texts; a hit when the top text is
/// any caption paired with that image). Ties go to the lower index.
/// Queries are binned by the uncertainty of the distribution-valued side
/// of the pair: the text, or the image for asym_image.
EvalReport build_report(const Model& model, const PairedEmbeddingDataset& dataset, int n_bins,
                        bool with_group_stats = false);

/// Per-pair uncertainty in the same convention as build_report.
std::vector<double> pair_uncertainty(const Model& model, const PairedEmbeddingDataset& dataset);

}  // namespace probemb
