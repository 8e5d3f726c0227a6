// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/masking.hpp"

#include <stdexcept>

namespace sepstereo {

Spectrogram apply_mask(const Spectrogram& s, const ComplexMask& m) {
  if (s.real.shape() != m.real.shape() || s.imag.shape() != m.imag.shape())
    throw std::invalid_argument("apply_mask: shape mismatch");
  Spectrogram out;
  out.real = sub(mul(s.real, m.real), mul(s.imag, m.imag));
  out.imag = add(mul(s.real, m.imag), mul(s.imag, m.real));
  return out;
}

Spectrogram difference_spectrum(const Spectrogram& l, const Spectrogram& r) {
  if (l.real.shape() != r.real.shape())
    throw std::invalid_argument("difference_spectrum: shape mismatch");
  return {scale(sub(l.real, r.real), 0.5f), scale(sub(l.imag, r.imag), 0.5f)};
}

std::pair<Spectrogram, Spectrogram> reconstruct_lr(const Spectrogram& mono,
                                                   const Spectrogram& d) {
  if (mono.real.shape() != d.real.shape())
    throw std::invalid_argument("reconstruct_lr: shape mismatch");
  Spectrogram left{add(mono.real, d.real), add(mono.imag, d.imag)};
  Spectrogram right{sub(mono.real, d.real), sub(mono.imag, d.imag)};
  return {left, right};
}

}  // namespace sepstereo
