#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vqcm/audio_io.hpp"
#include "vqcm/error.hpp"

namespace vqcm {

/// LPC-cepstrum front-end parameters.
///
/// The LPC analysis filter is A(z) = 1 - sum_{k=1..P} a_k z^-k, so the
/// first cepstral coefficient equals a_1. The cepstral order P1 feeds the
/// codebooks; the leading P2 <= P1 coefficients feed the covariance models.
struct FrontendConfig {
  int sample_rate_hz = kDefaultSampleRateHz;
  double preemphasis_coeff = 0.95;
  double frame_ms = 30.0;
  double overlap_fraction = 2.0 / 3.0;
  int lpc_order = 16;
  int cepstral_order_p1 = 16;
  int covariance_order_p2 = 10;

  /// Sets P1 and the LPC order together (LPC order tracks P1 by default).
  FrontendConfig& set_cepstral_order(int p1) {
    cepstral_order_p1 = p1;
    lpc_order = p1;
    return *this;
  }

  int frame_length() const {
    return static_cast<int>(std::lround(frame_ms * sample_rate_hz / 1000.0));
  }

  int hop_length() const {
    return static_cast<int>(std::lround(frame_length() * (1.0 - overlap_fraction)));
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
    if (sample_rate_hz <= 0) fail("sample rate must be positive");
    if (!(preemphasis_coeff >= 0.0 && preemphasis_coeff < 1.0)) fail("pre-emphasis must be in [0, 1)");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) fail("overlap must be in [0, 1)");
    if (lpc_order < 1) fail("LPC order must be >= 1");
    if (covariance_order_p2 < 1) fail("P2 must be >= 1");
    if (covariance_order_p2 > cepstral_order_p1) fail("P2 must not exceed P1");
    if (frame_length() < lpc_order + 1) fail("frame shorter than LPC order + 1");
    if (hop_length() < 1) fail("hop length rounds to zero");
  }

  friend bool operator==(const FrontendConfig&, const FrontendConfig&) = default;
};

/// Cepstral vectors of one utterance, stored row-major.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  explicit FeatureSequence(std::size_t dim, std::string source_id = {})
      : dim_(dim), source_id_(std::move(source_id)) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }
  const std::string& source_id() const noexcept { return source_id_; }
  void set_source_id(std::string id) { source_id_ = std::move(id); }

  std::span<const double> operator[](std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<double> operator[](std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> v) {
    if (v.size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "vector of size " + std::to_string(v.size()) + " in sequence of dim " +
                      std::to_string(dim_));
    }
    data_.insert(data_.end(), v.begin(), v.end());
  }

  void reserve(std::size_t n) { data_.reserve(n * dim_); }
  std::span<const double> flat() const noexcept { return data_; }

  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::string source_id_;
};

// ---------------------------------------------------------------------------

inline AudioSignal preemphasize(const AudioSignal& signal, double coeff) {
  AudioSignal out;
  out.sample_rate_hz = signal.sample_rate_hz;
  out.samples.resize(signal.samples.size());
  for (std::size_t n = 0; n < signal.samples.size(); ++n) {
    out.samples[n] = n == 0 ? signal.samples[0] : signal.samples[n] - coeff * signal.samples[n - 1];
  }
  return out;
}

inline std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  }
  // cos() is not exactly symmetric in floating point; mirror the first half.
  for (std::size_t n = 0; n < length / 2; ++n) w[length - 1 - n] = w[n];
  return w;
}

inline std::size_t frame_count(std::size_t signal_length, std::size_t frame_length, std::size_t hop) {
  if (signal_length < frame_length) return 0;
  return (signal_length - frame_length) / hop + 1;
}

/// Hamming-windowed frames; frame k covers samples [k*hop, k*hop + L).
inline std::vector<std::vector<double>> frame_signal(const AudioSignal& signal,
                                                     const FrontendConfig& config) {
  const auto length = static_cast<std::size_t>(config.frame_length());
  const auto hop = static_cast<std::size_t>(config.hop_length());
  const auto window = hamming_window(length);
  const std::size_t count = frame_count(signal.samples.size(), length, hop);
  std::vector<std::vector<double>> frames(count, std::vector<double>(length));
  for (std::size_t k = 0; k < count; ++k) {
    const double* src = signal.samples.data() + k * hop;
    for (std::size_t n = 0; n < length; ++n) frames[k][n] = src[n] * window[n];
  }
  return frames;
}

/// r[k] = sum_{n=k}^{L-1} x[n] x[n-k], k = 0..order.
inline std::vector<double> autocorrelate(std::span<const double> frame, int order) {
  std::vector<double> r(static_cast<std::size_t>(order) + 1, 0.0);
  for (std::size_t k = 0; k < r.size() && k < frame.size(); ++k) {
    double acc = 0.0;
    for (std::size_t n = k; n < frame.size(); ++n) acc += frame[n] * frame[n - k];
    r[k] = acc;
  }
  return r;
}

struct LpcResult {
  std::vector<double> lpc;         // a_1..a_P
  std::vector<double> reflection;  // k_1..k_P
  double prediction_error = 0.0;
};

namespace detail {

inline std::optional<ErrorCode> levinson_durbin_into(std::span<const double> r, LpcResult& out) {
  const std::size_t order = r.size() - 1;
  out.lpc.assign(order, 0.0);
  out.reflection.assign(order, 0.0);
  if (!(r[0] > 0.0)) return ErrorCode::kInvalidFrame;

  std::vector<double> prev(order, 0.0);
  double error = r[0];
  for (std::size_t i = 1; i <= order; ++i) {
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc -= out.lpc[j - 1] * r[i - j];
    const double k = acc / error;
    prev = out.lpc;
    out.lpc[i - 1] = k;
    for (std::size_t j = 1; j < i; ++j) out.lpc[j - 1] = prev[j - 1] - k * prev[i - j - 1];
    out.reflection[i - 1] = k;
    error *= (1.0 - k * k);
    if (!(error > 0.0)) return ErrorCode::kInvalidAutocorrelation;
  }
  out.prediction_error = error;
  return std::nullopt;
}

}  // namespace detail

/// Solves the Toeplitz normal equations R a = r[1..P] by the Levinson-Durbin
/// recursion.
inline LpcResult levinson_durbin(std::span<const double> r) {
  if (r.empty()) throw Error(ErrorCode::kInvalidFrame, "empty autocorrelation");
  LpcResult result;
  if (auto err = detail::levinson_durbin_into(r, result)) {
    throw Error(*err, *err == ErrorCode::kInvalidFrame ? "r[0] <= 0"
                                                       : "non-positive prediction error");
  }
  return result;
}

/// c_n = a_n + sum_{k=1}^{n-1} (k/n) c_k a_{n-k}, with a_k = 0 for k > P.
inline std::vector<double> lpc_to_cepstrum(std::span<const double> lpc, int q) {
  const auto order = lpc.size();
  std::vector<double> c(static_cast<std::size_t>(q), 0.0);
  for (std::size_t n = 1; n <= c.size(); ++n) {
    double acc = n <= order ? lpc[n - 1] : 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      if (n - k <= order) acc += (static_cast<double>(k) / n) * c[k - 1] * lpc[n - k - 1];
    }
    c[n - 1] = acc;
  }
  return c;
}

/// Full front-end: pre-emphasis, Hamming framing, autocorrelation,
/// Levinson-Durbin, LPC-to-cepstrum. Frames the recursion rejects are dropped.
inline FeatureSequence extract_features(const AudioSignal& signal, const FrontendConfig& config,
                                        std::string source_id = {}) {
  config.validate();
  const auto emphasized = preemphasize(signal, config.preemphasis_coeff);
  const auto frames = frame_signal(emphasized, config);

  FeatureSequence features(static_cast<std::size_t>(config.cepstral_order_p1), std::move(source_id));
  features.reserve(frames.size());
  LpcResult lpc;
  for (const auto& frame : frames) {
    const auto r = autocorrelate(frame, config.lpc_order);
    if (detail::levinson_durbin_into(r, lpc)) continue;
    const auto cep = lpc_to_cepstrum(lpc.lpc, config.cepstral_order_p1);
    bool finite = true;
    for (double v : cep) finite = finite && std::isfinite(v);
    if (finite) features.push_back(cep);
  }
  if (features.empty()) {
    throw Error(ErrorCode::kEmptyFeatures,
                "no usable frames in " + (features.source_id().empty() ? std::string("signal")
                                                                       : features.source_id()));
  }
  return features;
}

/// Debug dump: header c1..cP1, one row per frame.
inline void write_features_csv(std::ostream& out, const FeatureSequence& features) {
  const auto old_precision = out.precision(17);
  for (std::size_t j = 0; j < features.dim(); ++j) out << (j ? "," : "") << 'c' << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto row = features[i];
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace vqcm
