// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <span>
#include <utility>

#include "sepstereo/layers.hpp"
#include "sepstereo/masking.hpp"

namespace sepstereo {

// Side network over the four finest decoder stages. Each tap turns the
// visual feature map into per-cell 1x1 kernels (kernel transfer), convolves
// the decoder feature map with them (Associative-Conv), and the pyramid
// upsamples and concatenates coarse-to-fine. Channel n of every associative
// response belongs to visual cell n = y*w + x.
struct Apnet {
  std::array<Tensor, 4> transfer;  // W_i: [C_v, C_a^i]
  std::array<Deconv2d, 3> up;      // k4 s2 p1, output channels = grid cells
  Conv2d head1, head2;             // parallel mask heads, 2 channels each

  static Apnet create(int c_v, int grid_cells,
                      const std::array<int, 4>& tap_channels, int head_kernel,
                      SplitMix64& rng);
};

// conv1x1_dynamic with transferred kernels; output channel n is the audio
// response associated with visual cell n.
Tensor associative_conv(const Tensor& f_a, const Tensor& kernels);

// First tap passes through; later taps concat(DeConv(prev), cur) on
// channels.
Tensor pyramid_step(const Tensor& cur);
Tensor pyramid_step(const Deconv2d& up, const Tensor& prev, const Tensor& cur);

std::pair<ComplexMask, ComplexMask> apnet_heads(const Apnet& ap,
                                                const Tensor& last);

struct ApnetOut {
  std::array<Tensor, 4> assoc;  // per-tap Associative-Conv responses
  ComplexMask mask1, mask2;     // (left,right) in stereo mode, (A,B) in separation
};

// dec_maps are the five decoder feature maps, coarse to fine; taps attach
// to stages 2..5.
ApnetOut apnet_forward(const Apnet& ap, std::span<const Tensor> dec_maps,
                       const Tensor& fv);

}  // namespace sepstereo
