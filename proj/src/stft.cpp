// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sepstereo/fft.hpp"

namespace sepstereo {

namespace {

std::vector<double> hann_periodic(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

// reflect101 padding lookup; a length-1 signal degenerates to a constant.
double reflect_sample(std::span<const float> x, std::int64_t i) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  if (n == 1) return x[0];
  const std::int64_t period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  if (i >= n) i = period - i;
  return x[static_cast<std::size_t>(i)];
}

}  // namespace

void StftConfig::validate() const {
  if (window_len < 2 || window_len % 2 != 0)
    throw std::invalid_argument("stft: window_len must be even and >= 2");
  if (hop < 1 || hop > window_len)
    throw std::invalid_argument("stft: hop must be in [1, window_len]");
}

int stft_frames(std::int64_t len, const StftConfig& cfg) {
  cfg.validate();
  if (len < 1) throw std::invalid_argument("stft: empty signal");
  return static_cast<int>(1 + (len + cfg.hop - 1) / cfg.hop);
}

Spectrogram stft(std::span<const float> x, const StftConfig& cfg) {
  const int frames = stft_frames(static_cast<std::int64_t>(x.size()), cfg);
  const int w = cfg.window_len;
  const int f_bins = cfg.f_bins();
  const std::vector<double> win = hann_periodic(w);

  // Padded signal: reflect by w/2 on both sides, then zero-fill (or drop)
  // so that exactly `frames` full windows fit.
  const std::int64_t needed = static_cast<std::int64_t>(frames - 1) * cfg.hop + w;
  const std::int64_t pad = cfg.center_pad ? w / 2 : 0;
  std::vector<double> padded(static_cast<std::size_t>(needed), 0.0);
  for (std::int64_t i = 0; i < needed; ++i) {
    const std::int64_t src = i - pad;
    if (cfg.center_pad) {
      if (src < static_cast<std::int64_t>(x.size()) + pad)
        padded[static_cast<std::size_t>(i)] = reflect_sample(x, src);
    } else if (src >= 0 && src < static_cast<std::int64_t>(x.size())) {
      padded[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(src)];
    }
  }

  Tensor real = Tensor::zeros({f_bins, frames});
  Tensor imag = Tensor::zeros({f_bins, frames});
  std::vector<double> frame(static_cast<std::size_t>(w));
  for (int t = 0; t < frames; ++t) {
    const std::int64_t off = static_cast<std::int64_t>(t) * cfg.hop;
    for (int n = 0; n < w; ++n)
      frame[static_cast<std::size_t>(n)] =
          padded[static_cast<std::size_t>(off + n)] * win[static_cast<std::size_t>(n)];
    const auto spec = fft::rfft(frame);
    for (int k = 0; k < f_bins; ++k) {
      real.data()[static_cast<std::size_t>(k) * frames + t] =
          static_cast<float>(spec[static_cast<std::size_t>(k)].real());
      imag.data()[static_cast<std::size_t>(k) * frames + t] =
          static_cast<float>(spec[static_cast<std::size_t>(k)].imag());
    }
  }
  return {real, imag};
}

std::vector<float> istft(const Spectrogram& s, const StftConfig& cfg,
                         std::int64_t out_len) {
  cfg.validate();
  const int w = cfg.window_len;
  const int f_bins = cfg.f_bins();
  if (s.f_bins() != f_bins)
    throw std::invalid_argument("istft: spectrogram bins do not match config");
  if (out_len < 0) throw std::invalid_argument("istft: negative output length");
  const int frames = s.t_frames();
  const std::vector<double> win = hann_periodic(w);

  const std::int64_t total = static_cast<std::int64_t>(frames - 1) * cfg.hop + w;
  std::vector<double> acc(static_cast<std::size_t>(total), 0.0);
  std::vector<double> wsum(static_cast<std::size_t>(total), 0.0);

  std::vector<std::complex<double>> spec(static_cast<std::size_t>(f_bins));
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < f_bins; ++k)
      spec[static_cast<std::size_t>(k)] = {
          static_cast<double>(s.real.data()[static_cast<std::size_t>(k) * frames + t]),
          static_cast<double>(s.imag.data()[static_cast<std::size_t>(k) * frames + t])};
    const auto frame = fft::irfft(spec, w);
    const std::int64_t off = static_cast<std::int64_t>(t) * cfg.hop;
    for (int n = 0; n < w; ++n) {
      acc[static_cast<std::size_t>(off + n)] += frame[static_cast<std::size_t>(n)] * win[static_cast<std::size_t>(n)];
      wsum[static_cast<std::size_t>(off + n)] += win[static_cast<std::size_t>(n)] * win[static_cast<std::size_t>(n)];
    }
  }

  const std::int64_t pad = cfg.center_pad ? w / 2 : 0;
  if (pad + out_len > total)
    throw std::invalid_argument("istft: requested length exceeds frame coverage");
  std::vector<float> out(static_cast<std::size_t>(out_len));
  for (std::int64_t i = 0; i < out_len; ++i) {
    const double ws = wsum[static_cast<std::size_t>(pad + i)];
    if (ws < 1e-10)
      throw std::runtime_error("istft: vanishing window overlap");  // Hann + hop<=w/2 cannot reach this
    out[static_cast<std::size_t>(i)] =
        static_cast<float>(acc[static_cast<std::size_t>(pad + i)] / ws);
  }
  return out;
}

std::vector<float> mono_average(std::span<const float> l, std::span<const float> r) {
  if (l.size() != r.size())
    throw std::invalid_argument("mono_average: length mismatch");
  std::vector<float> out(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) out[i] = 0.5f * (l[i] + r[i]);
  return out;
}

std::vector<float> mix(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("mix: length mismatch");
  return mono_average(a, b);
}

Spectrogram spec_average(const Spectrogram& a, const Spectrogram& b) {
  if (a.real.shape() != b.real.shape())
    throw std::invalid_argument("spec_average: shape mismatch");
  Spectrogram out{Tensor::zeros(a.real.shape()), Tensor::zeros(a.imag.shape())};
  for (std::int64_t i = 0; i < a.real.numel(); ++i) {
    out.real.data()[static_cast<std::size_t>(i)] =
        0.5f * (a.real.data()[static_cast<std::size_t>(i)] + b.real.data()[static_cast<std::size_t>(i)]);
    out.imag.data()[static_cast<std::size_t>(i)] =
        0.5f * (a.imag.data()[static_cast<std::size_t>(i)] + b.imag.data()[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace sepstereo
