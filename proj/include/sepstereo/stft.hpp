// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sepstereo/tensor.hpp"

namespace sepstereo {

// Analysis framing: periodic Hann window, reflect center padding, and a
// weighted overlap-add inverse normalized by the squared window. With the
// defaults a 0.63 s clip at 16 kHz maps to a [257, 64] spectrogram.
struct StftConfig {
  int window_len = 512;
  int hop = 160;
  bool center_pad = true;

  int f_bins() const { return window_len / 2 + 1; }
  void validate() const;
};

// Complex time-frequency array stored as separate real/imag planes [F, T].
struct Spectrogram {
  Tensor real;
  Tensor imag;

  int f_bins() const { return real.dim(0); }
  int t_frames() const { return real.dim(1); }
};

// Number of frames produced for a clip: 1 + ceil(len / hop).
int stft_frames(std::int64_t len, const StftConfig& cfg);

Spectrogram stft(std::span<const float> x, const StftConfig& cfg);

std::vector<float> istft(const Spectrogram& s, const StftConfig& cfg,
                         std::int64_t out_len);

// (l + r) / 2, elementwise. STFT linearity makes stft(mono_average(l, r))
// equal spec_average(stft(l), stft(r)).
std::vector<float> mono_average(std::span<const float> l, std::span<const float> r);

// Mixture of two mono sources, (a + b) / 2.
std::vector<float> mix(std::span<const float> a, std::span<const float> b);

Spectrogram spec_average(const Spectrogram& a, const Spectrogram& b);

}  // namespace sepstereo
