// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sepstereo/model.hpp"
#include "sepstereo/stft.hpp"

namespace sepstereo {

struct LossWeights {
  float lambda1 = 1.0f;
  float lambda2 = 1.0f;
  bool use_ld = true;
};

struct TrainConfig {
  AdamConfig adam;
  int batch = 4;  // gradient accumulation count; the paper-scale value is 144
  int steps = 500;
  int warmup_steps = 100;  // separation-only phase of joint training
  std::uint64_t seed = 1234;
  float amp_lo = 0.5f;
  float amp_hi = 1.5f;
  bool vertical_placement = false;  // "vertical extreme" ablation
  bool unet_out = false;            // report the backbone mask path at inference
  LossWeights weights;
};

enum class Task { Stereo, Separation, Joint };
enum class BatchMode { Stereo, Separation };

// ----------------------------------------------------------------- losses

// Squared L2 over the real and imag planes.
Tensor loss_d(const Spectrogram& pred, const Spectrogram& truth);
// Sum of two squared-L2 terms (L_rl and L_ab share this form).
Tensor loss_pair(const Spectrogram& p1, const Spectrogram& t1,
                 const Spectrogram& p2, const Spectrogram& t2);
// l_d*[use_ld] + lambda1*l_rl + lambda2*l_ab.
float loss_all(float l_d, float l_rl, float l_ab, const LossWeights& w);

// --------------------------------------------------------- rearrangement

enum class Placement { Horizontal, Vertical };

// Builds the dummy visual map: all zero except the two pooled vectors at the
// extreme positions (left/right edge of the middle row, or top/bottom of the
// middle column for vertical placement). Differentiable w.r.t. both vectors.
Tensor rearrange(const Tensor& fa_vec, const Tensor& fb_vec, int w_v, int h_v,
                 Placement placement);

// ------------------------------------------------------------- predictors

// Full-resolution spectrogram helpers. The backbone needs dims divisible by
// 32, so the Nyquist row is dropped on the way in and restored as zeros on
// the way out.
Spectrogram crop_nyquist(const Spectrogram& s);
Spectrogram append_zero_nyquist(const Spectrogram& s);
Tensor spec_to_input(const Spectrogram& cropped);

struct StereoPred {
  Spectrogram left, right;  // cropped resolution, graph-connected
  std::optional<Spectrogram> diff;
};

StereoPred predict_stereo(SepStereoModel& model, const Spectrogram& mono_full,
                          const Tensor& fv, bool want_diff, bool unet_out);

struct SepPred {
  Spectrogram a, b;
};

SepPred predict_sep(SepStereoModel& model, const Spectrogram& mix_full,
                    const Tensor& fv0);

// Separation head reused as a pseudo-stereo predictor: the visual map is
// max-pooled to a small grid, average-pooled to [C,1,2], split by horizontal
// position and rearranged as the two extreme vectors.
struct UnsupPoolConfig {
  int pool_h = 2;  // paper-scale grids use [3, 6]
  int pool_w = 2;
};

std::pair<Tensor, Tensor> unsupervised_pool(const Tensor& fv,
                                            const UnsupPoolConfig& cfg);

StereoPred unsupervised_stereo_inference(SepStereoModel& model,
                                         const Spectrogram& mono_full,
                                         const Tensor& fv,
                                         const UnsupPoolConfig& cfg,
                                         Placement placement);

// ---------------------------------------------------------------- training

struct StereoBatchItem {
  Tensor frames;  // [T,3,H,W]
  std::vector<float> left, right;
};

struct SepBatchItem {
  Tensor frames_a, frames_b;
  std::vector<float> a, b;
};

struct StepRecord {
  std::int64_t step = 0;
  BatchMode mode = BatchMode::Stereo;
  float l_d = 0.0f, l_rl = 0.0f, l_ab = 0.0f, l_all = 0.0f;
};

std::string format_step_record(const StepRecord& r);

using StereoSampler = std::function<StereoBatchItem(SplitMix64&)>;
using SepSampler = std::function<SepBatchItem(SplitMix64&)>;

class Trainer {
 public:
  Trainer(SepStereoModel model, StftConfig stft_cfg, TrainConfig cfg);

  // One optimizer update from an accumulated batch. Deterministic given the
  // seed; throws on non-finite losses.
  StepRecord train_step(const std::vector<StereoBatchItem>& batch);
  StepRecord train_step(const std::vector<SepBatchItem>& batch);

  // Warmup of separation-only steps, then strict 1:1 alternation starting
  // with a stereo batch. A missing separation sampler degrades a joint run
  // to stereo-only; a missing stereo sampler is an error for joint/stereo.
  std::vector<StepRecord> run(Task task, const StereoSampler& stereo,
                              const SepSampler& sep, int steps,
                              std::ostream* log);

  SepStereoModel& model() { return model_; }
  Adam& optimizer() { return opt_; }
  const TrainConfig& config() const { return cfg_; }
  const StftConfig& stft_config() const { return stft_cfg_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }
  SplitMix64& data_rng() { return data_rng_; }

 private:
  SepStereoModel model_;
  StftConfig stft_cfg_;
  TrainConfig cfg_;
  Adam opt_;
  std::int64_t step_ = 0;
  SplitMix64 data_rng_;
};

}  // namespace sepstereo
