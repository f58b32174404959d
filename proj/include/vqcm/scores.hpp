#pragma once

#include <optional>
#include <string>
#include <vector>

namespace vqcm {

/// Per-speaker classifier distances for one test utterance: d_0 from the
/// codebook and d_1..d_N from the per-cluster covariance comparisons. An
/// empty optional marks a classifier that could not be evaluated (no
/// codebook, or too few test vectors fell into that cluster).
struct ScoreVector {
  std::string speaker_id;
  std::optional<double> d0;
  std::vector<std::optional<double>> di;

  /// Number of classifiers (N + 1 for a VQ-CM model).
  std::size_t classifier_count() const noexcept { return 1 + di.size(); }

  /// Classifier j: 0 is d_0, j >= 1 is d_j.
  std::optional<double> classifier(std::size_t j) const { return j == 0 ? d0 : di.at(j - 1); }

  bool has_any() const {
    if (d0) return true;
    for (const auto& d : di) {
      if (d) return true;
    }
    return false;
  }
};

}  // namespace vqcm
