#include "probemb/inference.hpp"

#include <algorithm>
#include <limits>

namespace probemb {
namespace {

void check_homogeneous(const std::vector<Distribution>& dists, const char* what) {
  if (dists.empty()) {
    throw DomainError(std::string(what) + ": candidate list is empty");
  }
  for (const auto& d : dists) {
    if (d.index() != dists.front().index()) {
      throw DomainError(std::string(what) + ": distributions mix families");
    }
  }
}

}  // namespace

Ranking rank_scores(Eigen::Index query_index, const Vector& scores) {
  if (scores.size() == 0) {
    throw DomainError("rank_scores: no candidates");
  }
  Ranking r{query_index, {}};
  r.ordered.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    r.ordered.push_back({i, scores[i]});
  }
  std::stable_sort(r.ordered.begin(), r.ordered.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  return r;
}

Ranking retrieve_t2i(const Distribution& text, const std::vector<UnitVector>& images,
                     Eigen::Index query_index) {
  if (images.empty()) {
    throw DomainError("retrieve_t2i: candidate list is empty");
  }
  Vector scores(static_cast<Eigen::Index>(images.size()));
  for (std::size_t s = 0; s < images.size(); ++s) {
    scores[static_cast<Eigen::Index>(s)] = log_pdf(text, images[s]);
  }
  return rank_scores(query_index, scores);
}

Ranking retrieve_i2t(const std::vector<Distribution>& texts, const UnitVector& image,
                     Eigen::Index query_index) {
  check_homogeneous(texts, "retrieve_i2t");
  Vector scores(static_cast<Eigen::Index>(texts.size()));
  for (std::size_t r = 0; r < texts.size(); ++r) {
    scores[static_cast<Eigen::Index>(r)] = log_pdf(texts[r], image);
  }
  return rank_scores(query_index, scores);
}

std::string to_string(RejectRule r) {
  switch (r) {
    case RejectRule::none:
      return "none";
    case RejectRule::dummy:
      return "dummy";
    case RejectRule::threshold:
      return "threshold";
    case RejectRule::margin:
      return "margin";
  }
  return "unknown";
}

RejectRule reject_rule_from_string(const std::string& s) {
  if (s == "none") return RejectRule::none;
  if (s == "dummy") return RejectRule::dummy;
  if (s == "threshold") return RejectRule::threshold;
  if (s == "margin") return RejectRule::margin;
  throw DomainError("unknown rejection rule '" + s + "'");
}

ClassifyDecision classify_scores(const Vector& scores, const RejectOptions& options) {
  if (scores.size() == 0) {
    throw DomainError("classify: no classes");
  }
  if (!scores.allFinite()) {
    throw DomainError("classify: non-finite class score");
  }
  ClassifyDecision out{kReject, scores, options.rule};
  Eigen::Index best = 0;
  scores.maxCoeff(&best);  // first maximum on ties
  switch (options.rule) {
    case RejectRule::none:
      out.predicted = best;
      break;
    case RejectRule::dummy: {
      if (!options.dummy_index) {
        throw DomainError("classify: rule 'dummy' needs a dummy index");
      }
      const Eigen::Index dummy = *options.dummy_index;
      if (dummy < 0 || dummy >= scores.size()) {
        throw DomainError("classify: dummy index " + std::to_string(dummy) +
                          " out of range for " + std::to_string(scores.size()) + " classes");
      }
      out.predicted = best == dummy ? kReject : best;
      break;
    }
    case RejectRule::threshold:
      if (!options.threshold) {
        throw DomainError("classify: rule 'threshold' needs a threshold");
      }
      out.predicted = scores[best] < *options.threshold ? kReject : best;
      break;
    case RejectRule::margin: {
      if (!options.margin) {
        throw DomainError("classify: rule 'margin' needs a margin");
      }
      double second = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < scores.size(); ++i) {
        if (i != best) {
          second = std::max(second, scores[i]);
        }
      }
      out.predicted = scores[best] - second < *options.margin ? kReject : best;
      break;
    }
  }
  return out;
}

ClassifyDecision classify(const UnitVector& image, const std::vector<Distribution>& class_dists,
                          const RejectOptions& options) {
  check_homogeneous(class_dists, "classify");
  Vector scores(static_cast<Eigen::Index>(class_dists.size()));
  for (std::size_t c = 0; c < class_dists.size(); ++c) {
    scores[static_cast<Eigen::Index>(c)] = log_pdf(class_dists[c], image);
  }
  return classify_scores(scores, options);
}

}  // namespace probemb
