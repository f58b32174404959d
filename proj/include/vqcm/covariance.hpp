#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <iostream>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqcm/error.hpp"
#include "vqcm/frontend.hpp"
#include "vqcm/scores.hpp"
#include "vqcm/vq.hpp"

namespace vqcm {

inline constexpr double kDefaultRidge = 1e-6;

/// Receives non-fatal diagnostics; defaults to stderr.
inline std::function<void(std::string_view)>& warning_sink() {
  static std::function<void(std::string_view)> sink = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

struct CovarianceModel {
  int dim = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd matrix;
  std::size_t sample_count = 0;
  double ridge_applied = 0.0;  // lambda added to the diagonal, 0 if none

  friend bool operator==(const CovarianceModel& a, const CovarianceModel& b) {
    return a.dim == b.dim && a.sample_count == b.sample_count && a.ridge_applied == b.ridge_applied &&
           a.mean == b.mean && a.matrix == b.matrix;
  }
};

/// Strict positive-definiteness: Cholesky succeeds and no pivot collapses
/// below 1e-12 of the largest diagonal entry.
inline bool is_positive_definite(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  const double scale = m.diagonal().maxCoeff();
  if (!(scale > 0.0)) return false;
  const Eigen::VectorXd pivots = llt.matrixL().toDenseMatrix().diagonal();
  return pivots.array().square().minCoeff() > 1e-12 * scale;
}

/// Maximum-likelihood (1/M) covariance of the leading `p2` components of
/// each vector. A relative ridge of `ridge * trace / p2` is added only when
/// the raw estimate is not positive definite (an absolute `ridge` when the
/// trace is zero).
template <std::ranges::input_range R>
  requires std::convertible_to<std::ranges::range_reference_t<R>, std::span<const double>>
CovarianceModel sample_covariance(R&& vectors, int p2, double ridge = kDefaultRidge) {
  if (p2 < 1) throw Error(ErrorCode::kInvalidConfig, "covariance order must be >= 1");
  const auto dim = static_cast<Eigen::Index>(p2);

  std::vector<Eigen::VectorXd> rows;
  for (std::span<const double> v : vectors) {
    if (v.size() < static_cast<std::size_t>(p2)) {
      throw Error(ErrorCode::kDimensionMismatch, "vector shorter than covariance order");
    }
    rows.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), dim));
  }
  if (rows.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                std::to_string(rows.size()) + " vectors for a covariance estimate");
  }

  CovarianceModel model;
  model.dim = p2;
  model.sample_count = rows.size();
  model.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& r : rows) model.mean += r;
  model.mean /= static_cast<double>(rows.size());

  model.matrix = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& r : rows) {
    const Eigen::VectorXd centered = r - model.mean;
    model.matrix.selfadjointView<Eigen::Upper>().rankUpdate(centered);
  }
  model.matrix /= static_cast<double>(rows.size());
  const Eigen::MatrixXd full = model.matrix.selfadjointView<Eigen::Upper>();
  model.matrix = full;

  if (!is_positive_definite(model.matrix)) {
    const double trace = model.matrix.trace();
    const double lambda = trace > 0.0 ? ridge * trace / p2 : ridge;
    model.matrix.diagonal().array() += lambda;
    model.ridge_applied = lambda;
    if (!is_positive_definite(model.matrix)) {
      throw Error(ErrorCode::kSingularModel, "covariance not positive definite after ridge");
    }
  }
  return model;
}

inline CovarianceModel sample_covariance(const FeatureSequence& vectors, int p2,
                                         double ridge = kDefaultRidge) {
  auto rows = std::views::iota(std::size_t{0}, vectors.size()) |
              std::views::transform([&](std::size_t i) { return vectors[i]; });
  return sample_covariance(rows, p2, ridge);
}

namespace detail {

// tr(A B^-1) through a Cholesky solve against B.
inline double trace_ratio(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularModel, "matrix is not positive definite");
  }
  return llt.solve(a).trace();
}

}  // namespace detail

/// Arithmetic-harmonic sphericity:
///   log( tr(A B^-1) tr(B A^-1) / 2 ) - 2 log(P).
/// Symmetric, invariant to positive scaling of either argument, and bounded
/// below by -log 2 with equality iff A is proportional to B.
inline double sphericity(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "sphericity of differently sized matrices");
  }
  const double p = static_cast<double>(a.rows());
  return std::log(detail::trace_ratio(a, b) * detail::trace_ratio(b, a) / 2.0) - 2.0 * std::log(p);
}

inline double sphericity(const CovarianceModel& test, const CovarianceModel& model) {
  return sphericity(test.matrix, model.matrix);
}

// ---------------------------------------------------------------------------
// Speaker models
// ---------------------------------------------------------------------------

enum class Method { kVq, kCm, kVqcm };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kVq: return "vq";
    case Method::kCm: return "cm";
    case Method::kVqcm: return "vqcm";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "vq") return Method::kVq;
  if (name == "cm") return Method::kCm;
  if (name == "vqcm") return Method::kVqcm;
  throw Error(ErrorCode::kInvalidConfig, "unknown method '" + std::string(name) + "'");
}

/// One enrolled speaker. VQ models carry only a codebook, CM models a single
/// global covariance, VQ-CM models a codebook plus one covariance per
/// centroid.
struct SpeakerModel {
  std::string speaker_id;
  Method method = Method::kVqcm;
  FrontendConfig config;
  Codebook codebook;
  std::vector<CovarianceModel> clusters;

  friend bool operator==(const SpeakerModel&, const SpeakerModel&) = default;
};

/// Minimum number of test vectors in a cluster before its covariance is
/// compared; emptier clusters yield a missing d_i.
inline std::size_t min_cluster_occupancy(int p2) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(p2) / 2);
}

inline CovarianceModel enroll_cm(const FeatureSequence& train, int p2, double ridge = kDefaultRidge) {
  if (train.size() < static_cast<std::size_t>(p2) + 1) {
    warning_sink()("only " + std::to_string(train.size()) + " training vectors for a " +
                   std::to_string(p2) + "x" + std::to_string(p2) + " covariance");
  }
  return sample_covariance(train, p2, ridge);
}

namespace detail {

inline auto rows_with_label(const FeatureSequence& vectors, const ClusterAssignment& assignment,
                            std::size_t label) {
  return std::views::iota(std::size_t{0}, vectors.size()) |
         std::views::filter([&assignment, label](std::size_t i) { return assignment.labels[i] == label; }) |
         std::views::transform([&vectors](std::size_t i) { return vectors[i]; });
}

}  // namespace detail

/// Codebook of 2^bits centroids, training vectors clustered around them, one
/// covariance per cluster over the leading P2 coefficients.
inline SpeakerModel enroll_vqcm(const FeatureSequence& train, int bits, int p2,
                                const LbgOptions& lbg = {}, double ridge = kDefaultRidge) {
  SpeakerModel model;
  model.method = Method::kVqcm;
  model.codebook = lbg_train(train, bits, lbg);
  const auto assignment = quantize(train, model.codebook);
  for (std::size_t c = 0; c < model.codebook.size(); ++c) {
    const auto count = assignment.per_cluster_counts[c];
    if (count == 0) {
      throw Error(ErrorCode::kEmptyCluster, "cluster " + std::to_string(c) + " has no training vectors");
    }
    if (count < 2) {
      throw Error(ErrorCode::kInsufficientData,
                  "cluster " + std::to_string(c) + " has a single training vector");
    }
    model.clusters.push_back(sample_covariance(detail::rows_with_label(train, assignment, c), p2, ridge));
  }
  return model;
}

struct MethodSpec {
  Method method = Method::kVqcm;
  int bits = 1;

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

/// Enrolls with the dimensions held in `config` (P1 for codebooks, P2 for
/// covariances).
inline SpeakerModel enroll(const FeatureSequence& train, const MethodSpec& spec,
                           const FrontendConfig& config, std::string speaker_id,
                           const LbgOptions& lbg = {}) {
  if (train.dim() != static_cast<std::size_t>(config.cepstral_order_p1)) {
    throw Error(ErrorCode::kDimensionMismatch, "training features do not match P1");
  }
  SpeakerModel model;
  switch (spec.method) {
    case Method::kVq:
      model.codebook = lbg_train(train, spec.bits, lbg);
      break;
    case Method::kCm:
      model.clusters.push_back(enroll_cm(train, config.covariance_order_p2));
      break;
    case Method::kVqcm:
      model = enroll_vqcm(train, spec.bits, config.covariance_order_p2, lbg);
      break;
  }
  model.method = spec.method;
  model.config = config;
  model.speaker_id = std::move(speaker_id);
  return model;
}

/// Test phase for a VQ-CM model: cluster the test vectors with this
/// speaker's codebook, d_0 is the mean quantization error and d_i the
/// sphericity between the test and training covariances of cluster i.
inline ScoreVector score_vqcm(const FeatureSequence& test, const SpeakerModel& model) {
  const auto assignment = quantize(test, model.codebook);
  ScoreVector scores;
  scores.speaker_id = model.speaker_id;
  scores.d0 = assignment.mean_distortion;
  const int p2 = model.config.covariance_order_p2;
  const auto min_count = min_cluster_occupancy(p2);
  for (std::size_t c = 0; c < model.clusters.size(); ++c) {
    if (assignment.per_cluster_counts[c] < min_count) {
      scores.di.emplace_back();
      continue;
    }
    const auto test_cov = sample_covariance(detail::rows_with_label(test, assignment, c), p2);
    scores.di.emplace_back(sphericity(test_cov, model.clusters[c]));
  }
  return scores;
}

/// Scores a test utterance against any model kind.
inline ScoreVector score(const FeatureSequence& test, const SpeakerModel& model) {
  if (test.empty()) throw Error(ErrorCode::kEmptyFeatures, "empty test sequence");
  switch (model.method) {
    case Method::kVq: {
      ScoreVector scores;
      scores.speaker_id = model.speaker_id;
      scores.d0 = vq_distance(test, model.codebook);
      return scores;
    }
    case Method::kCm: {
      ScoreVector scores;
      scores.speaker_id = model.speaker_id;
      const auto test_cov = sample_covariance(test, model.config.covariance_order_p2);
      scores.di.emplace_back(sphericity(test_cov, model.clusters.at(0)));
      return scores;
    }
    case Method::kVqcm:
      return score_vqcm(test, model);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown method");
}

}  // namespace vqcm
