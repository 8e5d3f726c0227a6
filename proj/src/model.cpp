// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/model.hpp"

#include <stdexcept>

namespace sepstereo {

void ModelConfig::validate() const {
  if (base_channels < 1) throw std::invalid_argument("model: base_channels must be >= 1");
  if (visual_channels < 1) throw std::invalid_argument("model: visual_channels must be >= 1");
  if (visual_proj < 1) throw std::invalid_argument("model: visual_proj must be >= 1");
  if (head_kernel < 1 || head_kernel % 2 == 0)
    throw std::invalid_argument("model: head_kernel must be odd");
  if (frame_height < 16 || frame_height % 16 != 0 || frame_width < 16 ||
      frame_width % 16 != 0)
    throw std::invalid_argument("model: frame dims must be multiples of 16");
}

VisualEncoder VisualEncoder::create(const ModelConfig& cfg, SplitMix64& rng) {
  VisualEncoder enc;
  enc.c1 = Conv2d::create(cfg.visual_channels, 3, 3, 2, 1, rng);
  enc.c2 = Conv2d::create(cfg.visual_channels, cfg.visual_channels, 3, 2, 1, rng);
  enc.c3 = Conv2d::create(cfg.visual_channels, cfg.visual_channels, 3, 2, 1, rng);
  return enc;
}

Tensor visual_encode(const VisualEncoder& enc, const Tensor& frames,
                     const ModelConfig& cfg) {
  if (frames.shape().size() != 4 || frames.dim(1) != 3 ||
      frames.dim(2) != cfg.frame_height || frames.dim(3) != cfg.frame_width)
    throw std::invalid_argument("visual_encode: frames must be [T,3," +
                                std::to_string(cfg.frame_height) + "," +
                                std::to_string(cfg.frame_width) + "]");
  const int t_frames = frames.dim(0);
  std::vector<Tensor> encoded;
  encoded.reserve(static_cast<std::size_t>(t_frames));
  for (int t = 0; t < t_frames; ++t) {
    Tensor x = slice_outer(frames, t);
    x = leaky_relu(enc.c1(x), cfg.leaky_slope);
    x = max_pool2x2(x);
    x = leaky_relu(enc.c2(x), cfg.leaky_slope);
    x = leaky_relu(enc.c3(x), cfg.leaky_slope);
    encoded.push_back(x);
  }
  return max_elementwise(encoded);
}

UNetBackbone UNetBackbone::create(const ModelConfig& cfg, SplitMix64& rng) {
  cfg.validate();
  const int b = cfg.base_channels;
  const std::array<int, 5> enc_ch{b, 2 * b, 4 * b, 8 * b, 8 * b};
  const std::array<int, 5> dec_ch{8 * b, 4 * b, 2 * b, b, b};

  UNetBackbone net;
  int in_ch = 2;
  for (int i = 0; i < 5; ++i) {
    net.enc[static_cast<std::size_t>(i)] =
        Conv2d::create(enc_ch[static_cast<std::size_t>(i)], in_ch, 4, 2, 1, rng);
    in_ch = enc_ch[static_cast<std::size_t>(i)];
  }
  net.vis_proj = LinearLayer::create(cfg.visual_proj, cfg.visual_channels, rng);
  in_ch = enc_ch[4] + cfg.visual_proj;
  for (int i = 0; i < 5; ++i) {
    net.dec[static_cast<std::size_t>(i)] =
        Deconv2d::create(in_ch, dec_ch[static_cast<std::size_t>(i)], 4, 2, 1, rng);
    // next stage consumes the deconv output plus its skip partner
    in_ch = dec_ch[static_cast<std::size_t>(i)] +
            (i < 4 ? enc_ch[static_cast<std::size_t>(3 - i)] : 0);
  }
  net.mask_head = Conv2d::create(2, dec_ch[4], 1, 1, 0, rng);
  return net;
}

BackboneOut unet_forward(const UNetBackbone& net, const Tensor& spec_in,
                         const Tensor& fv, const ModelConfig& cfg,
                         bool want_mask) {
  if (spec_in.shape().size() != 3 || spec_in.dim(0) != 2)
    throw std::invalid_argument("unet_forward: input must be [2,F,T]");
  if (spec_in.dim(1) % 32 != 0 || spec_in.dim(2) % 32 != 0)
    throw std::invalid_argument("unet_forward: spatial dims must be divisible by 32");
  if (fv.shape().size() != 3 || fv.dim(0) != cfg.visual_channels)
    throw std::invalid_argument("unet_forward: bad visual feature map");

  std::array<Tensor, 5> skips;
  Tensor x = spec_in;
  for (int i = 0; i < 5; ++i) {
    x = leaky_relu(net.enc[static_cast<std::size_t>(i)](x), cfg.leaky_slope);
    skips[static_cast<std::size_t>(i)] = x;
  }

  // Mono2Binaural-style conditioning: pooled visual vector, projected and
  // tiled over the bottleneck grid, concatenated on channels.
  Tensor cond = net.vis_proj(max_pool_spatial_full(fv));
  x = concat(x, tile_spatial(cond, x.dim(1), x.dim(2)), 0);

  BackboneOut out;
  for (int i = 0; i < 5; ++i) {
    x = relu(net.dec[static_cast<std::size_t>(i)](x));
    out.dec_maps[static_cast<std::size_t>(i)] = x;
    if (i < 4) x = concat(x, skips[static_cast<std::size_t>(3 - i)], 0);
  }

  if (want_mask) {
    const Tensor m = net.mask_head(out.dec_maps[4]);
    out.m_d = ComplexMask{slice_outer(m, 0), slice_outer(m, 1)};
    out.has_mask = true;
  }
  return out;
}

SepStereoModel SepStereoModel::create(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SplitMix64 rng(seed);
  SepStereoModel model;
  model.cfg = cfg;
  model.visual = VisualEncoder::create(cfg, rng);
  model.unet = UNetBackbone::create(cfg, rng);
  model.ap_stereo =
      Apnet::create(cfg.visual_channels, cfg.grid_cells(), cfg.tap_channels(),
                    cfg.head_kernel, rng);
  model.ap_sep =
      Apnet::create(cfg.visual_channels, cfg.grid_cells(), cfg.tap_channels(),
                    cfg.head_kernel, rng);
  return model;
}

namespace {

using VisitFn = std::function<void(const std::string&, Tensor&)>;

void visit_conv(const std::string& name, Conv2d& c, const VisitFn& fn) {
  fn(name + ".w", c.w);
  fn(name + ".b", c.b);
}

void visit_deconv(const std::string& name, Deconv2d& c, const VisitFn& fn) {
  fn(name + ".w", c.w);
  fn(name + ".b", c.b);
}

void visit_apnet(const std::string& name, Apnet& ap, const VisitFn& fn) {
  for (int i = 0; i < 4; ++i)
    fn(name + ".transfer" + std::to_string(i + 1), ap.transfer[static_cast<std::size_t>(i)]);
  for (int i = 0; i < 3; ++i)
    visit_deconv(name + ".up" + std::to_string(i + 1), ap.up[static_cast<std::size_t>(i)], fn);
  visit_conv(name + ".head1", ap.head1, fn);
  visit_conv(name + ".head2", ap.head2, fn);
}

}  // namespace

void SepStereoModel::visit(const VisitFn& fn) {
  visit_conv("visual.c1", visual.c1, fn);
  visit_conv("visual.c2", visual.c2, fn);
  visit_conv("visual.c3", visual.c3, fn);
  for (int i = 0; i < 5; ++i)
    visit_conv("unet.enc" + std::to_string(i + 1), unet.enc[static_cast<std::size_t>(i)], fn);
  for (int i = 0; i < 5; ++i)
    visit_deconv("unet.dec" + std::to_string(i + 1), unet.dec[static_cast<std::size_t>(i)], fn);
  fn("unet.vis_proj.w", unet.vis_proj.w);
  fn("unet.vis_proj.b", unet.vis_proj.b);
  visit_conv("unet.mask_head", unet.mask_head, fn);
  visit_apnet("ap_stereo", ap_stereo, fn);
  visit_apnet("ap_sep", ap_sep, fn);
}

std::vector<Tensor> SepStereoModel::parameters() {
  std::vector<Tensor> out;
  visit([&](const std::string&, Tensor& t) { out.push_back(t); });
  return out;
}

std::vector<std::pair<std::string, Tensor>> SepStereoModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor>> out;
  visit([&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
  return out;
}

std::int64_t SepStereoModel::parameter_count() {
  std::int64_t n = 0;
  visit([&](const std::string&, Tensor& t) { n += t.numel(); });
  return n;
}

}  // namespace sepstereo
