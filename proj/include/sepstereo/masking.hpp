// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <utility>

#include "sepstereo/stft.hpp"
#include "sepstereo/tensor.hpp"

namespace sepstereo {

// Per-bin complex multiplier. Raw linear network output, unbounded.
struct ComplexMask {
  Tensor real;
  Tensor imag;
};

// Complex multiply, differentiable w.r.t. both operands:
//   out = (s_R + j s_I)(m_R + j m_I).
Spectrogram apply_mask(const Spectrogram& s, const ComplexMask& m);

// (l - r) / 2 elementwise; with the mono average this determines both
// channels.
Spectrogram difference_spectrum(const Spectrogram& l, const Spectrogram& r);

// Inverse of the mono/difference split. With d = (l - r) / 2 the consistent
// assignment is left = mono + d, right = mono - d.
std::pair<Spectrogram, Spectrogram> reconstruct_lr(const Spectrogram& mono,
                                                   const Spectrogram& d);

}  // namespace sepstereo
