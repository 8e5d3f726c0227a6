// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/fft.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace sepstereo::fft {

namespace {

using cd = std::complex<double>;

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

void fft_pow2(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const cd wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cd u = a[i + j];
        const cd v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (cd& v : a) v *= inv;
  }
}

// Chirp factor exp(-i pi k^2 / n); k^2 taken mod 2n in integers so the
// angle stays accurate for large k.
cd chirp(std::int64_t k, std::int64_t n) {
  const std::int64_t kk = (k * k) % (2 * n);
  const double ang = -kPi * static_cast<double>(kk) / static_cast<double>(n);
  return {std::cos(ang), std::sin(ang)};
}

void fft_bluestein(std::vector<cd>& a) {
  const std::int64_t n = static_cast<std::int64_t>(a.size());
  const std::size_t m = next_pow2(static_cast<std::size_t>(2 * n - 1));
  std::vector<cd> av(m, cd(0.0, 0.0)), bv(m, cd(0.0, 0.0));
  for (std::int64_t k = 0; k < n; ++k) {
    const cd c = chirp(k, n);
    av[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)] * c;
    const cd cc = std::conj(c);
    bv[static_cast<std::size_t>(k)] = cc;
    if (k > 0) bv[m - static_cast<std::size_t>(k)] = cc;
  }
  fft_pow2(av, false);
  fft_pow2(bv, false);
  for (std::size_t i = 0; i < m; ++i) av[i] *= bv[i];
  fft_pow2(av, true);
  for (std::int64_t k = 0; k < n; ++k)
    a[static_cast<std::size_t>(k)] = av[static_cast<std::size_t>(k)] * chirp(k, n);
}

}  // namespace

void transform(std::vector<cd>& a, bool inverse) {
  if (a.empty()) throw std::invalid_argument("fft: empty input");
  if (a.size() == 1) return;
  if (is_pow2(a.size())) {
    fft_pow2(a, inverse);
    return;
  }
  if (!inverse) {
    fft_bluestein(a);
    return;
  }
  for (cd& v : a) v = std::conj(v);
  fft_bluestein(a);
  const double inv = 1.0 / static_cast<double>(a.size());
  for (cd& v : a) v = std::conj(v) * inv;
}

std::vector<cd> rfft(std::span<const double> x) {
  std::vector<cd> a(x.begin(), x.end());
  transform(a, false);
  a.resize(x.size() / 2 + 1);
  return a;
}

std::vector<double> irfft(std::span<const cd> spec, int n) {
  if (n <= 0 || static_cast<int>(spec.size()) != n / 2 + 1)
    throw std::invalid_argument("irfft: spectrum size does not match n");
  std::vector<cd> a(static_cast<std::size_t>(n));
  for (int k = 0; k <= n / 2; ++k) a[static_cast<std::size_t>(k)] = spec[static_cast<std::size_t>(k)];
  for (int k = n / 2 + 1; k < n; ++k)
    a[static_cast<std::size_t>(k)] = std::conj(spec[static_cast<std::size_t>(n - k)]);
  transform(a, true);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)].real();
  return out;
}

std::vector<double> analytic_envelope(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  std::vector<cd> a(x.begin(), x.end());
  transform(a, false);
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) a[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) a[k] = cd(0.0, 0.0);
  transform(a, true);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(a[i]);
  return env;
}

}  // namespace sepstereo::fft
