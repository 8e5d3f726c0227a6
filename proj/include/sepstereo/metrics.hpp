// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sepstereo/audio.hpp"
#include "sepstereo/stft.hpp"

namespace sepstereo {

// ------------------------------------------------------- sliding inference

struct SlidingConfig {
  double window_s = 0.63;
  double hop_s = 0.1;
};

// Hop-grid window count: floor((len - window) / hop) + 1.
int sliding_window_count(std::int64_t len, int sample_rate,
                         const SlidingConfig& cfg);

// Per-window predictor: full-resolution mono spectrogram in, a pair of
// full-resolution channel spectrograms out.
using WindowPredictor =
    std::function<std::pair<Spectrogram, Spectrogram>(const Spectrogram&)>;

// Hops the analysis window over the clip, predicts both channels per
// window, inverts and overlap-adds with a triangular cross-fade. A final
// end-aligned window covers any remainder so output length equals input
// length.
AudioClip sliding_inference(std::span<const float> mono, int sample_rate,
                            const StftConfig& stft_cfg,
                            const SlidingConfig& cfg,
                            const WindowPredictor& predict);

// ----------------------------------------------------------- stereo metrics

struct StereoReport {
  std::vector<double> stft_d_per_clip;
  std::vector<double> env_d_per_clip;
  double stft_d = 0.0;  // unweighted mean over clips
  double env_d = 0.0;
};

// ||S_l^t - S_l^p||_2 + ||S_r^t - S_r^p||_2 per non-overlapping 0.63 s
// window, averaged over windows (Euclidean norm, not squared).
double stft_distance(const AudioClip& pred, const AudioClip& truth,
                     const StftConfig& cfg);

// L2 between analytic-signal envelopes, mean over channels, window-averaged
// like stft_distance.
double envelope_distance(const AudioClip& pred, const AudioClip& truth,
                         const StftConfig& cfg);

// ------------------------------------------------------- separation metrics

struct SepReport {
  std::vector<double> sdr, sir, sar;  // per source, dB, capped at +-100
  double sdr_mean = 0.0, sir_mean = 0.0, sar_mean = 0.0;
};

// Scalar-projection BSS-Eval for duets: each estimate is decomposed by
// least squares onto span{references}; no allowed-distortion filters, so
// values are comparable within this repo only.
SepReport bss_eval(std::span<const std::vector<float>> estimates,
                   std::span<const std::vector<float>> references);

std::string format_sep_report(const SepReport& r);

}  // namespace sepstereo
