#include "probemb/evaluation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace probemb {
namespace {

constexpr Eigen::Index kScoreBlock = 512;
constexpr int kTokenBucket = 5;

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranks[idx[k]] = avg;
    }
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

void check_pair_lengths(const std::vector<double>& xs, const std::vector<double>& ys,
                        const char* what) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw DomainError(std::string(what) + ": need two equal-length lists of at least 2 values");
  }
}

std::string token_bucket(int tokens) {
  const int lo = (std::max(tokens, 0) / kTokenBucket) * kTokenBucket;
  return "tokens=" + std::to_string(lo) + "-" + std::to_string(lo + kTokenBucket - 1);
}

}  // namespace

double recall_at_k(const std::vector<Ranking>& rankings,
                   const std::vector<Eigen::Index>& ground_truth, int k) {
  if (rankings.size() != ground_truth.size()) {
    throw DomainError("recall_at_k: rankings and ground truth differ in length");
  }
  if (k < 1) {
    throw DomainError("recall_at_k: k must be >= 1");
  }
  if (rankings.empty()) {
    return 0.0;
  }
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const auto& ordered = rankings[q].ordered;
    const Eigen::Index gt = ground_truth[q];
    if (gt < 0 || gt >= static_cast<Eigen::Index>(ordered.size())) {
      throw DomainError("recall_at_k: ground-truth index " + std::to_string(gt) +
                        " out of range for query " + std::to_string(q));
    }
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), ordered.size());
    for (std::size_t i = 0; i < top; ++i) {
      if (ordered[i].index == gt) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

std::vector<int> bin_by_uncertainty(const std::vector<double>& uncertainties, int n_bins) {
  if (n_bins < 2) {
    throw DomainError("bin_by_uncertainty: n_bins must be >= 2");
  }
  if (uncertainties.size() < static_cast<std::size_t>(n_bins)) {
    throw DomainError("bin_by_uncertainty: " + std::to_string(uncertainties.size()) +
                      " values cannot fill " + std::to_string(n_bins) + " bins");
  }
  const std::size_t n = uncertainties.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return uncertainties[a] < uncertainties[b];
  });
  std::vector<int> bins(n);
  for (std::size_t p = 0; p < n; ++p) {
    bins[idx[p]] = static_cast<int>(p * static_cast<std::size_t>(n_bins) / n);
  }
  return bins;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  check_pair_lengths(xs, ys, "spearman");
  if (is_constant(xs) || is_constant(ys)) {
    spdlog::warn("spearman: constant input, returning 0");
    return 0.0;
  }
  return pearson(average_ranks(xs), average_ranks(ys));
}

double r_squared(const std::vector<double>& xs, const std::vector<double>& ys) {
  check_pair_lengths(xs, ys, "r_squared");
  if (is_constant(xs)) {
    throw DomainError("r_squared: xs is constant, the regression is undefined");
  }
  if (is_constant(ys)) {
    return 1.0;
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    ss_res += r * r;
  }
  return std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
}

EvalReport report_from_hits(const std::vector<double>& uncertainty,
                            const std::vector<bool>& hit_t2i, const std::vector<bool>& hit_i2t,
                            int n_bins) {
  const std::size_t n = uncertainty.size();
  if (hit_t2i.size() != n || hit_i2t.size() != n) {
    throw DomainError("report_from_hits: hit lists and uncertainties differ in length");
  }
  const std::vector<int> bins = bin_by_uncertainty(uncertainty, n_bins);
  EvalReport rep;
  rep.n_bins = n_bins;
  std::vector<double> count(n_bins, 0.0), t2i(n_bins, 0.0), i2t(n_bins, 0.0);
  double all_t2i = 0.0, all_i2t = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    count[bins[q]] += 1.0;
    t2i[bins[q]] += hit_t2i[q] ? 1.0 : 0.0;
    i2t[bins[q]] += hit_i2t[q] ? 1.0 : 0.0;
    all_t2i += hit_t2i[q] ? 1.0 : 0.0;
    all_i2t += hit_i2t[q] ? 1.0 : 0.0;
  }
  rep.overall_recall1_t2i = all_t2i / static_cast<double>(n);
  rep.overall_recall1_i2t = all_i2t / static_cast<double>(n);
  std::vector<double> bin_index(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    bin_index[b] = b;
    rep.per_bin_recall_t2i.push_back(t2i[b] / count[b]);
    rep.per_bin_recall_i2t.push_back(i2t[b] / count[b]);
  }
  rep.spearman_t2i = spearman(bin_index, rep.per_bin_recall_t2i);
  rep.spearman_i2t = spearman(bin_index, rep.per_bin_recall_i2t);
  rep.r2_t2i = r_squared(bin_index, rep.per_bin_recall_t2i);
  rep.r2_i2t = r_squared(bin_index, rep.per_bin_recall_i2t);
  return rep;
}

std::vector<double> pair_uncertainty(const Model& model, const PairedEmbeddingDataset& dataset) {
  dataset.validate();
  const Encoded enc = encode(model, dataset.text_embs, dataset.image_embs);
  const bool image_side = model.config.variant == Variant::asym_image;
  const Vector u = uncertainty_of(model, image_side ? enc.image : enc.text);
  std::vector<double> out;
  out.reserve(dataset.pairs.size());
  for (const Pair& p : dataset.pairs) {
    out.push_back(u[image_side ? p.image_row : p.text_row]);
  }
  return out;
}

EvalReport build_report(const Model& model, const PairedEmbeddingDataset& dataset, int n_bins,
                        bool with_group_stats) {
  model.validate();
  dataset.validate();
  if (dataset.dim() != model.config.d_in) {
    throw DomainError("build_report: dataset dimension " + std::to_string(dataset.dim()) +
                      " does not match model dimension " + std::to_string(model.config.d_in));
  }
  if (with_group_stats && !dataset.metadata) {
    throw DomainError("build_report: group statistics need pair metadata (level, tokens, group)");
  }
  const Encoded enc = encode(model, dataset.text_embs, dataset.image_embs);
  const Eigen::Index n_text = dataset.text_embs.rows();
  const Eigen::Index n_image = dataset.image_embs.rows();

  std::vector<std::vector<std::size_t>> pairs_of_text(static_cast<std::size_t>(n_text));
  for (std::size_t p = 0; p < dataset.pairs.size(); ++p) {
    pairs_of_text[static_cast<std::size_t>(dataset.pairs[p].text_row)].push_back(p);
  }

  // Row argmax per text, column argmax per image, paired log-likelihoods.
  std::vector<Eigen::Index> best_image(static_cast<std::size_t>(n_text));
  std::vector<Eigen::Index> best_text(static_cast<std::size_t>(n_image), -1);
  std::vector<double> best_text_score(static_cast<std::size_t>(n_image),
                                      -std::numeric_limits<double>::infinity());
  std::vector<double> pair_ll(dataset.pairs.size());
  for (Eigen::Index begin = 0; begin < n_text; begin += kScoreBlock) {
    const Eigen::Index count = std::min(kScoreBlock, n_text - begin);
    const Matrix s = score_rows(model, enc, begin, count);
    for (Eigen::Index r = 0; r < count; ++r) {
      const Eigen::Index text = begin + r;
      Eigen::Index arg = 0;
      s.row(r).maxCoeff(&arg);
      best_image[static_cast<std::size_t>(text)] = arg;
      for (Eigen::Index c = 0; c < n_image; ++c) {
        if (s(r, c) > best_text_score[static_cast<std::size_t>(c)]) {
          best_text_score[static_cast<std::size_t>(c)] = s(r, c);
          best_text[static_cast<std::size_t>(c)] = text;
        }
      }
      for (std::size_t p : pairs_of_text[static_cast<std::size_t>(text)]) {
        pair_ll[p] = s(r, dataset.pairs[p].image_row);
      }
    }
  }

  std::vector<bool> hit_t2i, hit_i2t;
  for (const Pair& p : dataset.pairs) {
    hit_t2i.push_back(best_image[static_cast<std::size_t>(p.text_row)] == p.image_row);
    const Eigen::Index top = best_text[static_cast<std::size_t>(p.image_row)];
    bool any = false;
    for (std::size_t q : pairs_of_text[static_cast<std::size_t>(top)]) {
      any = any || dataset.pairs[q].image_row == p.image_row;
    }
    hit_i2t.push_back(any);
  }

  const bool image_side = model.config.variant == Variant::asym_image;
  const Vector u = uncertainty_of(model, image_side ? enc.image : enc.text);
  std::vector<double> unc;
  for (const Pair& p : dataset.pairs) {
    unc.push_back(u[image_side ? p.image_row : p.text_row]);
  }

  EvalReport rep = report_from_hits(unc, hit_t2i, hit_i2t, n_bins);
  if (with_group_stats) {
    std::map<std::string, GroupStat> groups;
    const auto& meta = *dataset.metadata;
    for (std::size_t p = 0; p < dataset.pairs.size(); ++p) {
      for (const std::string& key : {"level=" + std::to_string(meta[p].level),
                                     token_bucket(meta[p].tokens), "group=" + meta[p].group}) {
        GroupStat& g = groups[key];
        g.mean_uncertainty += unc[p];
        g.mean_log_likelihood += pair_ll[p];
        ++g.count;
      }
    }
    for (auto& [key, g] : groups) {
      g.mean_uncertainty /= static_cast<double>(g.count);
      g.mean_log_likelihood /= static_cast<double>(g.count);
    }
    rep.group_stats = std::move(groups);
  }
  return rep;
}

}  // namespace probemb
