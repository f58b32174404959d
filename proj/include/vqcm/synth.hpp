#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vqcm/audio_io.hpp"
#include "vqcm/error.hpp"
#include "vqcm/manifest.hpp"
#include "vqcm/noise.hpp"

namespace vqcm {

/// Output RMS of synthesized speech. Low enough that a Gaussian-like
/// waveform essentially never clips in 16-bit PCM.
inline constexpr double kSynthRms = 0.1;

struct PolePair {
  double radius = 0.9;
  double angle = 0.0;  // radians, in (0, pi)
};

struct SyntheticSpeakerSpec {
  std::string speaker_id;
  std::vector<PolePair> poles;
  double gain = kSynthRms;  // output RMS
  std::uint64_t seed = 0;
};

/// Coefficients a_1..a_P of A(z) = 1 - sum a_k z^-k whose roots are the
/// conjugate pole pairs.
inline std::vector<double> all_pole_coefficients(const std::vector<PolePair>& poles) {
  std::vector<double> poly{1.0};  // A(z) in powers of z^-1
  for (const auto& p : poles) {
    const double b1 = -2.0 * p.radius * std::cos(p.angle);
    const double b2 = p.radius * p.radius;
    std::vector<double> next(poly.size() + 2, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] += b1 * poly[i];
      next[i + 2] += b2 * poly[i];
    }
    poly = std::move(next);
  }
  std::vector<double> a(poly.size() - 1);
  for (std::size_t k = 1; k < poly.size(); ++k) a[k - 1] = -poly[k];
  return a;
}

inline void check_stable(const SyntheticSpeakerSpec& spec) {
  for (const auto& p : spec.poles) {
    if (!(p.radius > 0.0 && p.radius < 1.0)) {
      throw Error(ErrorCode::kUnstableFilter, "speaker '" + spec.speaker_id + "' has a pole of radius " +
                                                  std::to_string(p.radius));
    }
  }
}

/// White Gaussian excitation through the speaker's all-pole filter,
/// normalized to `spec.gain` RMS. Deterministic in (spec, utterance_index).
inline AudioSignal synth_utterance(const SyntheticSpeakerSpec& spec, double duration_s,
                                   std::uint64_t utterance_index, int sample_rate_hz = kDefaultSampleRateHz) {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::kInvalidConfig, "duration must be positive");
  check_stable(spec);
  const auto a = all_pole_coefficients(spec.poles);
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sample_rate_hz));
  const std::size_t warmup = 4096;

  std::mt19937_64 rng(mix_seed(spec.seed, utterance_index));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> y(warmup + n, 0.0);
  for (std::size_t t = 0; t < y.size(); ++t) {
    double acc = gauss(rng);
    for (std::size_t k = 1; k <= a.size() && k <= t; ++k) acc += a[k - 1] * y[t - k];
    y[t] = acc;
  }

  AudioSignal out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.assign(y.begin() + static_cast<std::ptrdiff_t>(warmup), y.end());
  const double rms = std::sqrt(mean_power(out.samples));
  for (double& x : out.samples) x *= spec.gain / rms;
  return out;
}

struct SynthCorpusOptions {
  int n_speakers = 10;
  double train_s = 60.0;
  int n_test = 5;
  double test_s = 2.0;
  std::uint64_t seed = 1;
  /// Minimum pole-angle separation (radians) between any two speakers.
  double margin = 0.04;
  bool write_alaw = false;
  int sample_rate_hz = kDefaultSampleRateHz;
};

/// Formant-like resonances shared by every synthetic speaker before the
/// per-speaker shift.
inline const std::vector<PolePair>& base_poles() {
  static const std::vector<PolePair> poles = [] {
    constexpr double fs = 8000.0;
    const double freqs[] = {500.0, 1500.0, 2500.0, 3300.0};
    const double radii[] = {0.96, 0.94, 0.92, 0.90};
    std::vector<PolePair> p;
    for (int i = 0; i < 4; ++i) p.push_back({radii[i], 2.0 * std::numbers::pi * freqs[i] / fs});
    return p;
  }();
  return poles;
}

/// Speaker s shifts every base angle by (s - (n-1)/2) * 1.5 * margin, plus a
/// seeded jitter within +/- margin/4, so any two speakers differ by at least
/// `margin` in every pole angle.
inline std::vector<SyntheticSpeakerSpec> make_speaker_specs(const SynthCorpusOptions& options) {
  if (options.n_speakers < 2) throw Error(ErrorCode::kInvalidConfig, "need at least 2 speakers");
  if (options.margin < 0.0) throw Error(ErrorCode::kInvalidConfig, "margin must be >= 0");
  std::mt19937_64 rng(mix_seed(options.seed, 0xC0FFEE));
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  const double centre = (options.n_speakers - 1) / 2.0;

  std::vector<SyntheticSpeakerSpec> specs;
  for (int s = 0; s < options.n_speakers; ++s) {
    SyntheticSpeakerSpec spec;
    char id[16];
    std::snprintf(id, sizeof id, "spk%02d", s);
    spec.speaker_id = id;
    spec.seed = mix_seed(options.seed, static_cast<std::uint64_t>(s) + 1);
    for (const auto& base : base_poles()) {
      PolePair p = base;
      p.angle += ((s - centre) * 1.5 + jitter(rng)) * options.margin;
      if (!(p.angle > 0.0 && p.angle < std::numbers::pi)) {
        throw Error(ErrorCode::kInvalidConfig, "margin too large: pole angle leaves (0, pi)");
      }
      spec.poles.push_back(p);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

/// Writes one training file and `n_test` test files per speaker plus
/// `manifest.csv` into `out_dir`. Utterance index 0 is the training file.
inline CorpusManifest synth_corpus(const std::filesystem::path& out_dir, const SynthCorpusOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

  CorpusManifest manifest;
  manifest.base_dir = out_dir;
  const auto format = options.write_alaw ? AudioFormat::kAlaw : AudioFormat::kWav;
  const char* ext = options.write_alaw ? ".alaw" : ".wav";
  auto emit = [&](const SyntheticSpeakerSpec& spec, double seconds, std::uint64_t index, Split split,
                  const std::string& name) {
    const auto signal = synth_utterance(spec, seconds, index, options.sample_rate_hz);
    const std::filesystem::path rel = spec.speaker_id + "_" + name + ext;
    if (options.write_alaw) {
      write_alaw(out_dir / rel, signal);
    } else {
      write_wav(out_dir / rel, signal);
    }
    manifest.entries.push_back({spec.speaker_id, rel, split, format});
  };

  for (const auto& spec : make_speaker_specs(options)) {
    emit(spec, options.train_s, 0, Split::kTrain, "train");
    for (int t = 0; t < options.n_test; ++t) {
      emit(spec, options.test_s, static_cast<std::uint64_t>(t) + 1, Split::kTest, "test" + std::to_string(t));
    }
  }
  write_manifest(out_dir / "manifest.csv", manifest);
  return manifest;
}

}  // namespace vqcm
