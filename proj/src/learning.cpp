// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/learning.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sepstereo {

Tensor loss_d(const Spectrogram& pred, const Spectrogram& truth) {
  return add(mse_sum(pred.real, truth.real), mse_sum(pred.imag, truth.imag));
}

Tensor loss_pair(const Spectrogram& p1, const Spectrogram& t1,
                 const Spectrogram& p2, const Spectrogram& t2) {
  return add(loss_d(p1, t1), loss_d(p2, t2));
}

float loss_all(float l_d, float l_rl, float l_ab, const LossWeights& w) {
  return (w.use_ld ? l_d : 0.0f) + w.lambda1 * l_rl + w.lambda2 * l_ab;
}

Tensor rearrange(const Tensor& fa_vec, const Tensor& fb_vec, int w_v, int h_v,
                 Placement placement) {
  if (fa_vec.shape().size() != 1 || fa_vec.shape() != fb_vec.shape())
    throw std::invalid_argument("rearrange: pooled vectors must share shape [C]");
  if (placement == Placement::Horizontal) {
    const int row = (h_v - 1) / 2;  // ceil(h/2) in 1-based indexing
    return add(scatter_cell(fa_vec, h_v, w_v, row, 0),
               scatter_cell(fb_vec, h_v, w_v, row, w_v - 1));
  }
  const int col = (w_v - 1) / 2;
  return add(scatter_cell(fa_vec, h_v, w_v, 0, col),
             scatter_cell(fb_vec, h_v, w_v, h_v - 1, col));
}

// ------------------------------------------------------------- predictors

Spectrogram crop_nyquist(const Spectrogram& s) {
  const int f = s.f_bins(), t = s.t_frames();
  Tensor real = Tensor::zeros({f - 1, t});
  Tensor imag = Tensor::zeros({f - 1, t});
  std::copy_n(s.real.data().data(), static_cast<std::size_t>(f - 1) * t, real.data().data());
  std::copy_n(s.imag.data().data(), static_cast<std::size_t>(f - 1) * t, imag.data().data());
  return {real, imag};
}

Spectrogram append_zero_nyquist(const Spectrogram& s) {
  const int f = s.f_bins(), t = s.t_frames();
  Tensor real = Tensor::zeros({f + 1, t});
  Tensor imag = Tensor::zeros({f + 1, t});
  std::copy_n(s.real.data().data(), static_cast<std::size_t>(f) * t, real.data().data());
  std::copy_n(s.imag.data().data(), static_cast<std::size_t>(f) * t, imag.data().data());
  return {real, imag};
}

Tensor spec_to_input(const Spectrogram& cropped) {
  const int f = cropped.f_bins(), t = cropped.t_frames();
  std::vector<float> data(2 * static_cast<std::size_t>(f) * t);
  std::copy_n(cropped.real.data().data(), static_cast<std::size_t>(f) * t, data.data());
  std::copy_n(cropped.imag.data().data(), static_cast<std::size_t>(f) * t,
              data.data() + static_cast<std::size_t>(f) * t);
  return Tensor::from_data({2, f, t}, std::move(data));
}

StereoPred predict_stereo(SepStereoModel& model, const Spectrogram& mono_full,
                          const Tensor& fv, bool want_diff, bool unet_out) {
  const Spectrogram mono = crop_nyquist(mono_full);
  const Tensor input = spec_to_input(mono);
  BackboneOut bo =
      unet_forward(model.unet, input, fv, model.cfg, want_diff || unet_out);

  StereoPred pred;
  if (unet_out) {
    // Ablation: the backbone difference path is the final output.
    Spectrogram diff = apply_mask(mono, bo.m_d);
    auto [left, right] = reconstruct_lr(mono, diff);
    pred.left = left;
    pred.right = right;
    pred.diff = diff;
    return pred;
  }
  ApnetOut ap = apnet_forward(model.ap_stereo, bo.dec_maps, fv);
  pred.left = apply_mask(mono, ap.mask1);
  pred.right = apply_mask(mono, ap.mask2);
  if (want_diff) pred.diff = apply_mask(mono, bo.m_d);
  return pred;
}

SepPred predict_sep(SepStereoModel& model, const Spectrogram& mix_full,
                    const Tensor& fv0) {
  const Spectrogram mix = crop_nyquist(mix_full);
  const Tensor input = spec_to_input(mix);
  // Only the APNet heads predict here; the backbone mask head is unused.
  BackboneOut bo = unet_forward(model.unet, input, fv0, model.cfg, false);
  ApnetOut ap = apnet_forward(model.ap_sep, bo.dec_maps, fv0);
  return {apply_mask(mix, ap.mask1), apply_mask(mix, ap.mask2)};
}

namespace {

// Adaptive max pool over the spatial grid, torch-style window bounds.
Tensor adaptive_max_pool(const Tensor& fv, int out_h, int out_w) {
  const int c = fv.dim(0), h = fv.dim(1), w = fv.dim(2);
  if (out_h > h || out_w > w)
    throw std::invalid_argument("unsupervised_pool: grid smaller than pool target");
  Tensor out = Tensor::zeros({c, out_h, out_w});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < out_h; ++i)
      for (int j = 0; j < out_w; ++j) {
        const int h0 = i * h / out_h, h1 = ((i + 1) * h + out_h - 1) / out_h;
        const int w0 = j * w / out_w, w1 = ((j + 1) * w + out_w - 1) / out_w;
        float best = fv.data()[(static_cast<std::size_t>(ch) * h + h0) * w + w0];
        for (int y = h0; y < h1; ++y)
          for (int x = w0; x < w1; ++x)
            best = std::max(best, fv.data()[(static_cast<std::size_t>(ch) * h + y) * w + x]);
        out.data()[(static_cast<std::size_t>(ch) * out_h + i) * out_w + j] = best;
      }
  return out;
}

}  // namespace

std::pair<Tensor, Tensor> unsupervised_pool(const Tensor& fv,
                                            const UnsupPoolConfig& cfg) {
  if (fv.shape().size() != 3)
    throw std::invalid_argument("unsupervised_pool: expected [C,h,w]");
  if (cfg.pool_w % 2 != 0)
    throw std::invalid_argument("unsupervised_pool: pool_w must be even");
  const Tensor pooled = adaptive_max_pool(fv, cfg.pool_h, cfg.pool_w);
  // Average over rows and over each horizontal half -> two [C] vectors.
  const int c = pooled.dim(0), ph = cfg.pool_h, pw = cfg.pool_w;
  Tensor left = Tensor::zeros({c});
  Tensor right = Tensor::zeros({c});
  const int half = pw / 2;
  for (int ch = 0; ch < c; ++ch) {
    double l = 0.0, r = 0.0;
    for (int i = 0; i < ph; ++i)
      for (int j = 0; j < pw; ++j) {
        const double v = pooled.data()[(static_cast<std::size_t>(ch) * ph + i) * pw + j];
        (j < half ? l : r) += v;
      }
    left.data()[static_cast<std::size_t>(ch)] = static_cast<float>(l / (ph * half));
    right.data()[static_cast<std::size_t>(ch)] = static_cast<float>(r / (ph * half));
  }
  return {left, right};
}

StereoPred unsupervised_stereo_inference(SepStereoModel& model,
                                         const Spectrogram& mono_full,
                                         const Tensor& fv,
                                         const UnsupPoolConfig& cfg,
                                         Placement placement) {
  auto [fa, fb] = unsupervised_pool(fv, cfg);
  const Tensor fv0 =
      rearrange(fa, fb, model.cfg.fv_w(), model.cfg.fv_h(), placement);
  SepPred sep = predict_sep(model, mono_full, fv0);
  StereoPred pred;
  pred.left = sep.a;
  pred.right = sep.b;
  return pred;
}

// ---------------------------------------------------------------- trainer

std::string format_step_record(const StepRecord& r) {
  std::ostringstream os;
  os << "step " << r.step << " mode "
     << (r.mode == BatchMode::Stereo ? "stereo" : "sep") << " L_D " << r.l_d
     << " L_rl " << r.l_rl << " L_ab " << r.l_ab << " L_all " << r.l_all;
  return os.str();
}

Trainer::Trainer(SepStereoModel model, StftConfig stft_cfg, TrainConfig cfg)
    : model_(std::move(model)),
      stft_cfg_(stft_cfg),
      cfg_(cfg),
      opt_(model_.parameters(), cfg.adam),
      data_rng_(cfg.seed) {}

StepRecord Trainer::train_step(const std::vector<StereoBatchItem>& batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  opt_.zero_grad();
  double ld_sum = 0.0, lrl_sum = 0.0, lall_sum = 0.0;
  for (const StereoBatchItem& item : batch) {
    const Spectrogram s_l = stft(item.left, stft_cfg_);
    const Spectrogram s_r = stft(item.right, stft_cfg_);
    const Spectrogram s_mono = spec_average(s_l, s_r);
    const Spectrogram target_d =
        crop_nyquist(difference_spectrum(s_l, s_r));
    const Spectrogram target_l = crop_nyquist(s_l);
    const Spectrogram target_r = crop_nyquist(s_r);

    const Tensor fv = visual_encode(model_.visual, item.frames, model_.cfg);
    StereoPred pred =
        predict_stereo(model_, s_mono, fv, cfg_.weights.use_ld, false);

    Tensor l_rl = loss_pair(pred.left, target_l, pred.right, target_r);
    Tensor total = scale(l_rl, cfg_.weights.lambda1);
    float ld_val = 0.0f;
    if (cfg_.weights.use_ld) {
      Tensor l_d = loss_d(*pred.diff, target_d);
      ld_val = l_d.item();
      total = add(total, l_d);
    }
    total.backward();
    ld_sum += ld_val;
    lrl_sum += l_rl.item();
    lall_sum += loss_all(ld_val, l_rl.item(), 0.0f, cfg_.weights);
  }
  opt_.step(static_cast<float>(batch.size()));
  StepRecord rec;
  rec.step = step_++;
  rec.mode = BatchMode::Stereo;
  rec.l_d = static_cast<float>(ld_sum / batch.size());
  rec.l_rl = static_cast<float>(lrl_sum / batch.size());
  rec.l_all = static_cast<float>(lall_sum / batch.size());
  return rec;
}

StepRecord Trainer::train_step(const std::vector<SepBatchItem>& batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  opt_.zero_grad();
  double lab_sum = 0.0, lall_sum = 0.0;
  const Placement placement = cfg_.vertical_placement ? Placement::Vertical
                                                      : Placement::Horizontal;
  for (const SepBatchItem& item : batch) {
    const std::vector<float> mixed = mix(item.a, item.b);
    const Spectrogram s_mix = stft(mixed, stft_cfg_);
    const Spectrogram target_a = crop_nyquist(stft(item.a, stft_cfg_));
    const Spectrogram target_b = crop_nyquist(stft(item.b, stft_cfg_));

    const Tensor fa = max_pool_spatial_full(
        visual_encode(model_.visual, item.frames_a, model_.cfg));
    const Tensor fb = max_pool_spatial_full(
        visual_encode(model_.visual, item.frames_b, model_.cfg));
    const Tensor fv0 =
        rearrange(fa, fb, model_.cfg.fv_w(), model_.cfg.fv_h(), placement);

    SepPred pred = predict_sep(model_, s_mix, fv0);
    Tensor l_ab = loss_pair(pred.a, target_a, pred.b, target_b);
    Tensor total = scale(l_ab, cfg_.weights.lambda2);
    total.backward();
    lab_sum += l_ab.item();
    lall_sum += loss_all(0.0f, 0.0f, l_ab.item(), cfg_.weights);
  }
  opt_.step(static_cast<float>(batch.size()));
  StepRecord rec;
  rec.step = step_++;
  rec.mode = BatchMode::Separation;
  rec.l_ab = static_cast<float>(lab_sum / batch.size());
  rec.l_all = static_cast<float>(lall_sum / batch.size());
  return rec;
}

std::vector<StepRecord> Trainer::run(Task task, const StereoSampler& stereo,
                                     const SepSampler& sep, int steps,
                                     std::ostream* log) {
  if ((task == Task::Stereo || task == Task::Joint) && !stereo)
    throw std::invalid_argument("train: stereo stream is empty");
  if (task == Task::Separation && !sep)
    throw std::invalid_argument("train: separation stream is empty");

  std::vector<StepRecord> records;
  records.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    BatchMode mode = BatchMode::Stereo;
    if (task == Task::Separation) {
      mode = BatchMode::Separation;
    } else if (task == Task::Joint && sep) {
      // warmup is separation-only; afterwards strict 1:1, stereo first
      const std::int64_t local = step_;
      if (local < cfg_.warmup_steps || (local - cfg_.warmup_steps) % 2 == 1)
        mode = BatchMode::Separation;
    }
    StepRecord rec;
    if (mode == BatchMode::Stereo) {
      std::vector<StereoBatchItem> batch;
      batch.reserve(static_cast<std::size_t>(cfg_.batch));
      for (int i = 0; i < cfg_.batch; ++i) batch.push_back(stereo(data_rng_));
      rec = train_step(batch);
    } else {
      std::vector<SepBatchItem> batch;
      batch.reserve(static_cast<std::size_t>(cfg_.batch));
      for (int i = 0; i < cfg_.batch; ++i) batch.push_back(sep(data_rng_));
      rec = train_step(batch);
    }
    if (log) *log << format_step_record(rec) << "\n";
    records.push_back(rec);
  }
  return records;
}

}  // namespace sepstereo
