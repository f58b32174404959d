#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vqcm {

enum class ErrorCode {
  // audio_io
  kIoFailure,
  kMalformedHeader,
  kMultiChannel,
  kUnsupportedEncoding,
  // dsp_frontend
  kInvalidConfig,
  kInvalidFrame,
  kInvalidAutocorrelation,
  kEmptyFeatures,
  // vq / covariance
  kInsufficientData,
  kEmptyCluster,
  kDimensionMismatch,
  kSingularModel,
  // fusion
  kUndecidableScore,
  kEmptyModelSet,
  // noise
  kUndefinedSnr,
  // synth
  kUnstableFilter,
  // model_store / manifests
  kVersionMismatch,
  kSchemaViolation,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoFailure: return "io-failure";
    case ErrorCode::kMalformedHeader: return "malformed-header";
    case ErrorCode::kMultiChannel: return "multi-channel";
    case ErrorCode::kUnsupportedEncoding: return "unsupported-encoding";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kInvalidFrame: return "invalid-frame";
    case ErrorCode::kInvalidAutocorrelation: return "invalid-autocorrelation";
    case ErrorCode::kEmptyFeatures: return "empty-features";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kEmptyCluster: return "empty-cluster";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kSingularModel: return "singular-model";
    case ErrorCode::kUndecidableScore: return "undecidable-score";
    case ErrorCode::kEmptyModelSet: return "empty-model-set";
    case ErrorCode::kUndefinedSnr: return "undefined-snr";
    case ErrorCode::kUnstableFilter: return "unstable-filter";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kSchemaViolation: return "schema-violation";
  }
  return "unknown";
}

/// Every failure in the library is reported as an Error carrying a code
/// that callers can dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vqcm
