#pragma once

// Independent reference implementations used only by the tests. None of
// these call into the library code they check.

#include <Eigen/Core>
#include <Eigen/QR>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace vqcm::oracle {

/// Naive O(L * order) autocorrelation with an explicit double loop.
inline std::vector<double> autocorrelation(const std::vector<double>& x, int order) {
  std::vector<double> r(static_cast<std::size_t>(order) + 1, 0.0);
  for (int k = 0; k <= order; ++k) {
    for (std::size_t n = 0; n < x.size(); ++n) {
      if (n >= static_cast<std::size_t>(k)) r[static_cast<std::size_t>(k)] += x[n] * x[n - static_cast<std::size_t>(k)];
    }
  }
  return r;
}

/// Dense Toeplitz solve R a = r[1..P] by Gaussian elimination with partial
/// pivoting.
inline std::vector<double> toeplitz_solve(const std::vector<double>& r) {
  const std::size_t p = r.size() - 1;
  std::vector<std::vector<double>> m(p, std::vector<double>(p + 1));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) m[i][j] = r[i > j ? i - j : j - i];
    m[i][p] = r[i + 1];
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < p; ++i) {
      if (std::abs(m[i][col]) > std::abs(m[piv][col])) piv = i;
    }
    std::swap(m[col], m[piv]);
    for (std::size_t i = col + 1; i < p; ++i) {
      const double f = m[i][col] / m[col][col];
      for (std::size_t j = col; j <= p; ++j) m[i][j] -= f * m[col][j];
    }
  }
  std::vector<double> a(p);
  for (std::size_t i = p; i-- > 0;) {
    double acc = m[i][p];
    for (std::size_t j = i + 1; j < p; ++j) acc -= m[i][j] * a[j];
    a[i] = acc / m[i][i];
  }
  return a;
}

/// Coefficients c_1..c_q of ln(1/A(z)) = -ln(1 - u), u = sum a_k z^-k,
/// via the truncated power series sum_{m>=1} u^m / m. The binomial terms
/// cancel heavily at high order, so the series is summed in long double.
inline std::vector<double> log_series_cepstrum(const std::vector<double>& a, int q) {
  const auto n = static_cast<std::size_t>(q) + 1;
  std::vector<long double> u(n, 0.0L);
  for (std::size_t k = 1; k < n && k <= a.size(); ++k) u[k] = a[k - 1];
  std::vector<long double> power = u;  // u^1
  std::vector<long double> total(n, 0.0L);
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) total[k] += power[k] / static_cast<long double>(m);
    std::vector<long double> next(n, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; i + j < n; ++j) next[i + j] += power[i] * u[j];
    }
    power = std::move(next);
  }
  return {total.begin() + 1, total.end()};
}

/// Two-pass covariance with explicit loops over the leading `dim` entries.
inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& xs, int dim) {
  const auto d = static_cast<std::size_t>(dim);
  std::vector<double> mean(d, 0.0);
  for (const auto& x : xs) {
    for (std::size_t i = 0; i < d; ++i) mean[i] += x[i];
  }
  for (double& m : mean) m /= static_cast<double>(xs.size());
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (const auto& x : xs) acc += (x[i] - mean[i]) * (x[j] - mean[j]);
      c[i][j] = acc / static_cast<double>(xs.size());
    }
  }
  return c;
}

/// Exhaustive nearest centroid, ties to the lowest index.
inline std::size_t nearest(const std::vector<double>& v, const std::vector<std::vector<double>>& centroids,
                           double* distance = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double d = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) d += (v[k] - centroids[c][k]) * (v[k] - centroids[c][k]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (distance) *distance = best_d;
  return best;
}

/// G.711 A-law expansion written from the segment/mantissa layout.
inline int alaw_expand(std::uint8_t code) {
  const int inverted = code ^ 0x55;
  const bool positive = (inverted & 0x80) != 0;
  const int exponent = (inverted >> 4) & 0x7;
  const int mantissa = inverted & 0xF;
  int magnitude13 = exponent == 0 ? (mantissa << 1) + 1 : ((mantissa << 1) + 33) << (exponent - 1);
  const int value16 = magnitude13 << 3;
  return positive ? value16 : -value16;
}

/// Encoder by exhaustive search: the code whose expansion is nearest on
/// the same side of zero.
inline std::uint8_t alaw_compress_search(int value16) {
  std::uint8_t best = 0;
  int best_err = std::numeric_limits<int>::max();
  for (int c = 0; c < 256; ++c) {
    const int v = alaw_expand(static_cast<std::uint8_t>(c));
    if ((v > 0) != (value16 >= 0)) continue;
    const int err = std::abs(v - value16);
    if (err < best_err) {
      best_err = err;
      best = static_cast<std::uint8_t>(c);
    }
  }
  return best;
}

/// Random SPD matrix Q diag(lambda) Q^T with eigenvalues in [lo, hi].
inline Eigen::MatrixXd random_spd(int dim, std::mt19937_64& rng, double lo = 0.2, double hi = 5.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd x(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) x(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd lambda(dim);
  for (int i = 0; i < dim; ++i) lambda(i) = u(rng);
  Eigen::MatrixXd m = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

/// tr(A B^-1) tr(B A^-1) via explicit inverses.
inline double sphericity_by_inverse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double p = static_cast<double>(a.rows());
  return std::log((a * b.inverse()).trace() * (b * a.inverse()).trace() / 2.0) - 2.0 * std::log(p);
}

}  // namespace vqcm::oracle
