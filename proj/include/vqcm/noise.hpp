#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "vqcm/audio_io.hpp"
#include "vqcm/error.hpp"

namespace vqcm {

struct NoiseSpec {
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

inline double mean_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

/// SplitMix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Adds white Gaussian noise whose power is the utterance's mean-square
/// power divided by 10^(snr/10). An infinite SNR returns the input.
/// The result is not clipped.
inline AudioSignal add_noise(const AudioSignal& signal, const NoiseSpec& spec) {
  if (std::isinf(spec.snr_db) && spec.snr_db > 0) return signal;
  if (std::isnan(spec.snr_db)) throw Error(ErrorCode::kInvalidConfig, "SNR is NaN");
  const double power = mean_power(signal.samples);
  if (!(power > 0.0)) {
    throw Error(ErrorCode::kUndefinedSnr, "signal has zero power; SNR " + std::to_string(spec.snr_db) + " dB");
  }
  const double sigma = std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0));
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  AudioSignal out = signal;
  for (double& x : out.samples) x += sigma * gauss(rng);
  return out;
}

}  // namespace vqcm
