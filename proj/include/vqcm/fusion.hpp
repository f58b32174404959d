#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqcm/error.hpp"
#include "vqcm/scores.hpp"

namespace vqcm {

enum class FusionScheme { kVqOnly, kCmOnlyGlobal, kSumAll, kSumCm, kMedianAll, kVote };

/// CLI spelling: vq, cm, sum-all, sum-cm, median, vote.
inline std::string_view to_string(FusionScheme scheme) {
  switch (scheme) {
    case FusionScheme::kVqOnly: return "vq";
    case FusionScheme::kCmOnlyGlobal: return "cm";
    case FusionScheme::kSumAll: return "sum-all";
    case FusionScheme::kSumCm: return "sum-cm";
    case FusionScheme::kMedianAll: return "median";
    case FusionScheme::kVote: return "vote";
  }
  return "?";
}

inline FusionScheme parse_scheme(std::string_view name) {
  for (auto s : {FusionScheme::kVqOnly, FusionScheme::kCmOnlyGlobal, FusionScheme::kSumAll,
                 FusionScheme::kSumCm, FusionScheme::kMedianAll, FusionScheme::kVote}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown fusion scheme '" + std::string(name) + "'");
}

namespace detail {

inline std::vector<double> available(const std::vector<std::optional<double>>& values) {
  std::vector<double> out;
  for (const auto& v : values) {
    if (v) out.push_back(*v);
  }
  return out;
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline Error undecidable(const ScoreVector& s, FusionScheme scheme) {
  return Error(ErrorCode::kUndecidableScore, "speaker '" + s.speaker_id + "' has no distances usable by scheme " +
                                                 std::string(to_string(scheme)));
}

}  // namespace detail

/// Combines the classifier distances of one speaker into a single score
/// (lower is better). Missing entries are left out of sums and medians.
///
/// `vote` is a decision rule rather than a score; fusing with it yields the
/// sum-all score, which is also its tie-breaker.
inline double fuse(const ScoreVector& scores, FusionScheme scheme) {
  const auto di = detail::available(scores.di);
  switch (scheme) {
    case FusionScheme::kVqOnly:
      if (!scores.d0) throw detail::undecidable(scores, scheme);
      return *scores.d0;
    case FusionScheme::kCmOnlyGlobal:
      if (scores.di.size() != 1 || !scores.di[0]) throw detail::undecidable(scores, scheme);
      return *scores.di[0];
    case FusionScheme::kSumCm:
      if (di.empty()) throw detail::undecidable(scores, scheme);
      return std::accumulate(di.begin(), di.end(), 0.0);
    case FusionScheme::kSumAll:
    case FusionScheme::kVote:
      if (!scores.d0 && di.empty()) throw detail::undecidable(scores, scheme);
      return scores.d0.value_or(0.0) + std::accumulate(di.begin(), di.end(), 0.0);
    case FusionScheme::kMedianAll: {
      auto all = di;
      if (scores.d0) all.push_back(*scores.d0);
      if (all.empty()) throw detail::undecidable(scores, scheme);
      return detail::median(std::move(all));
    }
  }
  throw detail::undecidable(scores, scheme);
}

struct RankedSpeaker {
  std::string speaker_id;
  double score = 0.0;
};

struct FusionOptions {
  /// Standardize every classifier across the enrolled speakers before
  /// fusing. Off by default; the plain sum is the reference behavior.
  bool z_normalize = false;
};

/// Per-classifier z-normalization across speakers; missing entries stay
/// missing, a constant classifier maps to zeros.
inline std::vector<ScoreVector> z_normalize(std::span<const ScoreVector> all) {
  std::vector<ScoreVector> out(all.begin(), all.end());
  std::size_t classifiers = 0;
  for (const auto& s : all) classifiers = std::max(classifiers, s.classifier_count());
  for (std::size_t j = 0; j < classifiers; ++j) {
    auto slot = [j](ScoreVector& s) -> std::optional<double>* {
      if (j == 0) return &s.d0;
      return j - 1 < s.di.size() ? &s.di[j - 1] : nullptr;
    };
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (auto& s : out) {
      if (auto* v = slot(s); v && *v) {
        sum += **v;
        sq += **v * **v;
        ++n;
      }
    }
    if (n == 0) continue;
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
    for (auto& s : out) {
      if (auto* v = slot(s); v && *v) **v = sd > 0.0 ? (**v - mean) / sd : 0.0;
    }
  }
  return out;
}

/// Speakers sorted by ascending fused score, ties by speaker id; element 0
/// is the decision.
inline std::vector<RankedSpeaker> identify(std::span<const ScoreVector> all_scores, FusionScheme scheme,
                                           const FusionOptions& options = {}) {
  if (all_scores.empty()) throw Error(ErrorCode::kEmptyModelSet, "no enrolled speakers");
  std::vector<ScoreVector> normalized;
  if (options.z_normalize) {
    normalized = z_normalize(all_scores);
    all_scores = normalized;
  }
  std::vector<RankedSpeaker> ranked;
  ranked.reserve(all_scores.size());
  for (const auto& s : all_scores) ranked.push_back({s.speaker_id, fuse(s, scheme)});
  std::sort(ranked.begin(), ranked.end(), [](const RankedSpeaker& a, const RankedSpeaker& b) {
    return a.score != b.score ? a.score < b.score : a.speaker_id < b.speaker_id;
  });
  return ranked;
}

struct VoteResult {
  std::string winner;
  std::map<std::string, int> votes;
};

/// Each classifier votes for the speaker it scores lowest (missing entries
/// abstain). Most votes wins; ties go to the lowest sum-all score, then to
/// the lexicographically smaller id.
inline VoteResult identify_by_vote(std::span<const ScoreVector> all_scores) {
  if (all_scores.empty()) throw Error(ErrorCode::kEmptyModelSet, "no enrolled speakers");
  std::size_t classifiers = 0;
  for (const auto& s : all_scores) classifiers = std::max(classifiers, s.classifier_count());

  VoteResult result;
  for (const auto& s : all_scores) result.votes[s.speaker_id] = 0;
  bool any_vote = false;
  for (std::size_t j = 0; j < classifiers; ++j) {
    const ScoreVector* best = nullptr;
    double best_value = 0.0;
    for (const auto& s : all_scores) {
      if (j >= s.classifier_count()) continue;
      const auto v = s.classifier(j);
      if (!v) continue;
      if (!best || *v < best_value || (*v == best_value && s.speaker_id < best->speaker_id)) {
        best = &s;
        best_value = *v;
      }
    }
    if (best) {
      ++result.votes[best->speaker_id];
      any_vote = true;
    }
  }
  if (!any_vote) {
    throw Error(ErrorCode::kUndecidableScore, "no classifier produced a distance");
  }

  int top = 0;
  for (const auto& [id, n] : result.votes) top = std::max(top, n);
  std::optional<RankedSpeaker> pick;
  for (const auto& s : all_scores) {
    if (result.votes[s.speaker_id] != top) continue;
    const double tie_break = fuse(s, FusionScheme::kSumAll);
    if (!pick || tie_break < pick->score ||
        (tie_break == pick->score && s.speaker_id < pick->speaker_id)) {
      pick = RankedSpeaker{s.speaker_id, tie_break};
    }
  }
  result.winner = pick->speaker_id;
  return result;
}

/// Rank-1 decision for any scheme, votes included.
inline std::string decide(std::span<const ScoreVector> all_scores, FusionScheme scheme,
                          const FusionOptions& options = {}) {
  if (scheme == FusionScheme::kVote) return identify_by_vote(all_scores).winner;
  return identify(all_scores, scheme, options).front().speaker_id;
}

}  // namespace vqcm
