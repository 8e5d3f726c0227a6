// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/apnet.hpp"

#include <stdexcept>

namespace sepstereo {

Apnet Apnet::create(int c_v, int grid_cells, const std::array<int, 4>& tap_channels,
                    int head_kernel, SplitMix64& rng) {
  Apnet ap;
  for (int i = 0; i < 4; ++i)
    ap.transfer[static_cast<std::size_t>(i)] =
        Tensor::uniform_init({c_v, tap_channels[static_cast<std::size_t>(i)]}, c_v, rng);
  ap.up[0] = Deconv2d::create(grid_cells, grid_cells, 4, 2, 1, rng);
  ap.up[1] = Deconv2d::create(2 * grid_cells, grid_cells, 4, 2, 1, rng);
  ap.up[2] = Deconv2d::create(2 * grid_cells, grid_cells, 4, 2, 1, rng);
  const int head_pad = (head_kernel - 1) / 2;
  ap.head1 = Conv2d::create(2, 2 * grid_cells, head_kernel, 1, head_pad, rng);
  ap.head2 = Conv2d::create(2, 2 * grid_cells, head_kernel, 1, head_pad, rng);
  return ap;
}

Tensor associative_conv(const Tensor& f_a, const Tensor& kernels) {
  return conv1x1_dynamic(f_a, kernels);
}

Tensor pyramid_step(const Tensor& cur) { return cur; }

Tensor pyramid_step(const Deconv2d& up, const Tensor& prev, const Tensor& cur) {
  Tensor grown = up(prev);
  if (grown.dim(1) != cur.dim(1) || grown.dim(2) != cur.dim(2))
    throw std::invalid_argument("pyramid_step: spatial mismatch after deconv");
  return concat(grown, cur, 0);
}

std::pair<ComplexMask, ComplexMask> apnet_heads(const Apnet& ap, const Tensor& last) {
  const Tensor y1 = ap.head1(last);
  const Tensor y2 = ap.head2(last);
  ComplexMask m1{slice_outer(y1, 0), slice_outer(y1, 1)};
  ComplexMask m2{slice_outer(y2, 0), slice_outer(y2, 1)};
  return {m1, m2};
}

ApnetOut apnet_forward(const Apnet& ap, std::span<const Tensor> dec_maps,
                       const Tensor& fv) {
  if (dec_maps.size() != 5)
    throw std::invalid_argument("apnet_forward: expected 5 decoder maps");
  ApnetOut out;
  Tensor pyramid;
  for (int i = 0; i < 4; ++i) {
    const Tensor& tap = dec_maps[static_cast<std::size_t>(i + 1)];
    const Tensor kernels = kernel_transfer(fv, ap.transfer[static_cast<std::size_t>(i)]);
    const Tensor assoc = associative_conv(tap, kernels);
    out.assoc[static_cast<std::size_t>(i)] = assoc;
    pyramid = i == 0 ? pyramid_step(assoc)
                     : pyramid_step(ap.up[static_cast<std::size_t>(i - 1)], pyramid, assoc);
  }
  auto [m1, m2] = apnet_heads(ap, pyramid);
  out.mask1 = m1;
  out.mask2 = m2;
  return out;
}

}  // namespace sepstereo
