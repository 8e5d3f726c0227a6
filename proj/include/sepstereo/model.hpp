// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "sepstereo/apnet.hpp"
#include "sepstereo/layers.hpp"

namespace sepstereo {

struct ModelConfig {
  int base_channels = 8;    // paper-scale 64
  int visual_channels = 8;  // C_v; paper-scale 512
  int visual_proj = 8;      // bottleneck conditioning width
  float leaky_slope = 0.2f;
  int head_kernel = 3;
  int frame_height = 32;  // visual input; F_v grid is [H/16, W/16]
  int frame_width = 64;   // toy default grid [2, 4]; paper-scale [7, 14]

  int fv_h() const { return frame_height / 16; }
  int fv_w() const { return frame_width / 16; }
  int grid_cells() const { return fv_h() * fv_w(); }
  // Decoder stage widths at the four APNet taps (stages 2..5).
  std::array<int, 4> tap_channels() const {
    return {4 * base_channels, 2 * base_channels, base_channels, base_channels};
  }
  void validate() const;
};

// Stand-in for a pretrained image network: three stride-2 conv blocks, the
// first followed by a 2x2 max pool (stem), leaky ReLU activations. Maps
// [3, H, W] frames to a [C_v, H/16, W/16] feature grid.
struct VisualEncoder {
  Conv2d c1, c2, c3;

  static VisualEncoder create(const ModelConfig& cfg, SplitMix64& rng);
};

// Per-frame encoding followed by elementwise max over time.
Tensor visual_encode(const VisualEncoder& enc, const Tensor& frames,
                     const ModelConfig& cfg);

// Conditional U-Net: five stride-2 downs, bottleneck conditioning from the
// pooled visual vector, five deconv ups with skip concats on the inner
// four, then a 1x1 conv mask head on the finest map.
struct UNetBackbone {
  std::array<Conv2d, 5> enc;
  std::array<Deconv2d, 5> dec;
  LinearLayer vis_proj;
  Conv2d mask_head;

  static UNetBackbone create(const ModelConfig& cfg, SplitMix64& rng);
};

struct BackboneOut {
  std::array<Tensor, 5> dec_maps;  // post-activation decoder maps, coarse to fine
  ComplexMask m_d;                 // only when requested
  bool has_mask = false;
};

// spec_in is [2, F, T] with both spatial dims divisible by 32.
BackboneOut unet_forward(const UNetBackbone& net, const Tensor& spec_in,
                         const Tensor& fv, const ModelConfig& cfg,
                         bool want_mask);

// Shared backbone plus one APNet parameter set per task.
struct SepStereoModel {
  ModelConfig cfg;
  VisualEncoder visual;
  UNetBackbone unet;
  Apnet ap_stereo;
  Apnet ap_sep;

  static SepStereoModel create(const ModelConfig& cfg, std::uint64_t seed);

  // Stable, documented enumeration order; checkpoint and optimizer layout
  // both derive from it.
  void visit(const std::function<void(const std::string&, Tensor&)>& fn);
  std::vector<Tensor> parameters();
  std::vector<std::pair<std::string, Tensor>> named_parameters();
  std::int64_t parameter_count();
};

}  // namespace sepstereo
