#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "vqcm/noise.hpp"

using namespace vqcm;
using Catch::Approx;

namespace {

AudioSignal unit_power_sine(std::size_t n) {
  AudioSignal s;
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * 440.0 * i / 8000.0));
  return s;
}

std::vector<double> residual(const AudioSignal& noisy, const AudioSignal& clean) {
  std::vector<double> r(clean.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = noisy.samples[i] - clean.samples[i];
  return r;
}

}  // namespace

TEST_CASE("infinite SNR is the identity", "[noise]") {
  const auto s = unit_power_sine(1000);
  CHECK(add_noise(s, {}).samples == s.samples);
}

TEST_CASE("noise variance follows the SNR", "[noise]") {
  const auto s = unit_power_sine(80000);
  REQUIRE(mean_power(s.samples) == Approx(1.0).epsilon(1e-3));
  const auto noisy = add_noise(s, {20.0, 5});
  CHECK(mean_power(residual(noisy, s)) == Approx(0.01).epsilon(0.02));
}

TEST_CASE("empirical SNR is within 0.2 dB", "[noise]") {
  const auto s = unit_power_sine(8000);
  for (double snr : {30.0, 25.0, 20.0, 15.0, 0.0}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto noisy = add_noise(s, {snr, seed});
      const double measured = 10.0 * std::log10(mean_power(s.samples) / mean_power(residual(noisy, s)));
      INFO("snr " << snr << " seed " << seed);
      REQUIRE(std::abs(measured - snr) <= 0.2);
    }
  }
}

TEST_CASE("noise is deterministic per seed and independent across seeds", "[noise]") {
  const auto s = unit_power_sine(8000);
  CHECK(add_noise(s, {20.0, 3}).samples == add_noise(s, {20.0, 3}).samples);
  const auto a = residual(add_noise(s, {20.0, 3}), s);
  const auto b = residual(add_noise(s, {20.0, 4}), s);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  CHECK(std::abs(ab / std::sqrt(aa * bb)) < 0.05);
  CHECK(mix_seed(7, 0) != mix_seed(7, 1));
  CHECK(mix_seed(7, 0) == mix_seed(7, 0));
}

TEST_CASE("noise errors", "[noise]") {
  AudioSignal zero;
  zero.samples.assign(100, 0.0);
  try {
    add_noise(zero, {10.0, 1});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUndefinedSnr);
  }
  CHECK(add_noise(zero, {}).samples == zero.samples);
  CHECK_THROWS_AS(add_noise(unit_power_sine(10), {std::nan(""), 1}), Error);
}
