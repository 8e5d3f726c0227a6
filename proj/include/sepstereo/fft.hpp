// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace sepstereo::fft {

// In-place complex DFT. Power-of-two sizes run the iterative radix-2
// butterfly; everything else goes through Bluestein's chirp-z resampling,
// so any length works (the envelope metric needs length-10080 transforms).
void transform(std::vector<std::complex<double>>& a, bool inverse);

// Real-input DFT, returns bins 0..n/2 (n/2+1 values).
std::vector<std::complex<double>> rfft(std::span<const double> x);

// Inverse of rfft for an even-length real signal of length n.
std::vector<double> irfft(std::span<const std::complex<double>> spec, int n);

// Magnitude of the analytic signal (negative frequencies zeroed, positive
// doubled, DC/Nyquist kept).
std::vector<double> analytic_envelope(std::span<const double> x);

}  // namespace sepstereo::fft
