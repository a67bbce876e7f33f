#pragma once

#include <optional>
#include <vector>

#include "probemb/directional.hpp"
#include "probemb/types.hpp"

namespace probemb {

struct Candidate {
  Eigen::Index index;
  double score;
};

/// Candidates by descending score; equal scores keep ascending index.
struct Ranking {
  Eigen::Index query_index = 0;
  std::vector<Candidate> ordered;
};

Ranking rank_scores(Eigen::Index query_index, const Vector& scores);

/// Images ranked by the text distribution's log-density at each image.
Ranking retrieve_t2i(const Distribution& text, const std::vector<UnitVector>& images,
                     Eigen::Index query_index = 0);

/// Texts ranked by their log-density at the image. Concentration and
/// normalizer differ per candidate, so this need not match cosine order.
Ranking retrieve_i2t(const std::vector<Distribution>& texts, const UnitVector& image,
                     Eigen::Index query_index = 0);

enum class RejectRule { none, dummy, threshold, margin };

std::string to_string(RejectRule r);
RejectRule reject_rule_from_string(const std::string& s);

inline constexpr Eigen::Index kReject = -1;

struct RejectOptions {
  RejectRule rule = RejectRule::none;
  std::optional<Eigen::Index> dummy_index{};
  std::optional<double> threshold{};
  std::optional<double> margin{};
};

struct ClassifyDecision {
  Eigen::Index predicted = kReject;
  Vector scores;
  RejectRule rule = RejectRule::none;

  bool rejected() const { return predicted == kReject; }
};

/// Applies a rejection rule to per-class scores.
///   dummy:     reject iff the dummy class wins
///   threshold: reject iff the best score < threshold
///   margin:    reject iff best - second best < margin
///   none:      plain argmax
ClassifyDecision classify_scores(const Vector& scores, const RejectOptions& options);

ClassifyDecision classify(const UnitVector& image, const std::vector<Distribution>& class_dists,
                          const RejectOptions& options);

}  // namespace probemb
