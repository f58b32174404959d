#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vqcm/error.hpp"
#include "vqcm/frontend.hpp"

namespace vqcm {

/// 2^bits centroids of a common dimension.
struct Codebook {
  int bits = 0;
  std::size_t dim = 0;
  std::vector<std::vector<double>> centroids;
  double training_distortion = 0.0;

  std::size_t size() const noexcept { return centroids.size(); }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct ClusterAssignment {
  std::vector<std::size_t> labels;
  std::vector<std::size_t> per_cluster_counts;
  double mean_distortion = 0.0;
};

struct LbgOptions {
  double epsilon = 0.01;
  int max_iters = 100;
  double tol = 1e-4;
};

/// Distortion after every k-means sweep, one list per codebook size
/// (1, 2, 4, ... centroids).
struct LbgTrace {
  std::vector<std::vector<double>> phases;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

namespace detail {

// Nearest centroid; ties go to the lower index.
inline std::size_t nearest(std::span<const double> v, const std::vector<std::vector<double>>& centroids,
                           double& best_distance) {
  std::size_t best = 0;
  best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(v, centroids[c]);
    if (d < best_distance) {
      best_distance = d;
      best = c;
    }
  }
  return best;
}

inline ClusterAssignment assign(const FeatureSequence& vectors,
                                const std::vector<std::vector<double>>& centroids) {
  ClusterAssignment out;
  out.labels.resize(vectors.size());
  out.per_cluster_counts.assign(centroids.size(), 0);
  double total = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    double d = 0.0;
    const std::size_t c = nearest(vectors[i], centroids, d);
    out.labels[i] = c;
    ++out.per_cluster_counts[c];
    total += d;
  }
  out.mean_distortion = total / static_cast<double>(vectors.size());
  return out;
}

inline void update_centroids(const FeatureSequence& vectors, const ClusterAssignment& assignment,
                             std::vector<std::vector<double>>& centroids) {
  const std::size_t dim = vectors.dim();
  std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    auto& sum = sums[assignment.labels[i]];
    const auto v = vectors[i];
    for (std::size_t j = 0; j < dim; ++j) sum[j] += v[j];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const auto count = assignment.per_cluster_counts[c];
    if (count == 0) continue;
    for (std::size_t j = 0; j < dim; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(count);
  }
}

// Per-component split offset: epsilon * |c_k|, floored at a small fraction of
// the data spread so a centroid sitting on a zero coordinate still splits.
inline std::vector<double> split_offset(std::span<const double> centroid,
                                        std::span<const double> spread, double epsilon) {
  std::vector<double> offset(centroid.size());
  for (std::size_t k = 0; k < centroid.size(); ++k) {
    offset[k] = epsilon * std::max(std::abs(centroid[k]), 1e-3 * spread[k]);
  }
  return offset;
}

}  // namespace detail

/// LBG codebook design: start from the global mean, split every centroid
/// into c(1 +/- epsilon), refine by k-means, repeat until 2^bits centroids.
///
/// An empty cell is respawned next to the most populated centroid, which
/// stays in place, so the recorded distortion never increases within a phase.
inline Codebook lbg_train(const FeatureSequence& vectors, int bits, const LbgOptions& options = {},
                          LbgTrace* trace = nullptr) {
  if (bits < 0 || bits > 30) throw Error(ErrorCode::kInvalidConfig, "codebook bits out of range");
  if (!(options.epsilon > 0.0)) throw Error(ErrorCode::kInvalidConfig, "LBG epsilon must be > 0");
  const std::size_t target = std::size_t{1} << bits;
  if (vectors.empty()) throw Error(ErrorCode::kEmptyFeatures, "no training vectors");
  if (vectors.size() < target) {
    throw Error(ErrorCode::kInsufficientData, std::to_string(vectors.size()) + " vectors for " +
                                                  std::to_string(target) + " centroids");
  }

  const std::size_t dim = vectors.dim();
  const auto count = static_cast<double>(vectors.size());
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto v = vectors[i];
    for (std::size_t j = 0; j < dim; ++j) mean[j] += v[j];
  }
  for (double& m : mean) m /= count;
  std::vector<double> spread(dim, 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto v = vectors[i];
    for (std::size_t j = 0; j < dim; ++j) spread[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
  }
  for (double& s : spread) s = std::sqrt(s / count);

  std::vector<std::vector<double>> centroids{mean};
  if (trace) trace->phases.clear();

  auto refine = [&]() {
    std::vector<double> history;
    double previous = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_iters; ++iter) {
      auto assignment = detail::assign(vectors, centroids);
      // Respawn empty cells; the donor centroid is left untouched.
      for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (assignment.per_cluster_counts[c] != 0) continue;
        const auto donor = static_cast<std::size_t>(
            std::max_element(assignment.per_cluster_counts.begin(),
                             assignment.per_cluster_counts.end()) -
            assignment.per_cluster_counts.begin());
        const auto offset = detail::split_offset(centroids[donor], spread, options.epsilon);
        for (std::size_t j = 0; j < dim; ++j) centroids[c][j] = centroids[donor][j] + offset[j];
        assignment = detail::assign(vectors, centroids);
      }
      const double distortion = assignment.mean_distortion;
      history.push_back(distortion);
      detail::update_centroids(vectors, assignment, centroids);
      if (distortion == 0.0) break;
      if (std::isfinite(previous) && (previous - distortion) / previous < options.tol) break;
      previous = distortion;
    }
    if (trace) trace->phases.push_back(std::move(history));
  };

  refine();
  while (centroids.size() < target) {
    std::vector<std::vector<double>> split;
    split.reserve(centroids.size() * 2);
    for (const auto& c : centroids) {
      const auto offset = detail::split_offset(c, spread, options.epsilon);
      std::vector<double> lo(c), hi(c);
      for (std::size_t j = 0; j < dim; ++j) {
        lo[j] -= offset[j];
        hi[j] += offset[j];
      }
      split.push_back(std::move(lo));
      split.push_back(std::move(hi));
    }
    centroids = std::move(split);
    refine();
  }

  Codebook codebook;
  codebook.bits = bits;
  codebook.dim = dim;
  codebook.centroids = std::move(centroids);
  codebook.training_distortion = detail::assign(vectors, codebook.centroids).mean_distortion;
  return codebook;
}

/// Nearest-centroid labels by squared Euclidean distance.
inline ClusterAssignment quantize(const FeatureSequence& vectors, const Codebook& codebook) {
  if (vectors.empty()) throw Error(ErrorCode::kEmptyFeatures, "nothing to quantize");
  if (vectors.dim() != codebook.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "features of dim " + std::to_string(vectors.dim()) +
                                                   " vs codebook dim " + std::to_string(codebook.dim));
  }
  return detail::assign(vectors, codebook.centroids);
}

/// d_0: mean squared quantization error per vector.
inline double vq_distance(const FeatureSequence& test, const Codebook& codebook) {
  return quantize(test, codebook).mean_distortion;
}

}  // namespace vqcm
