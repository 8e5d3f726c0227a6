// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "sepstereo/tensor.hpp"

namespace sepstereo {

// Weights init uniform in +-sqrt(1/fan_in) with fan_in = C_in*kh*kw (or the
// input width for Linear); biases start at zero. No normalization layers
// anywhere, per-channel bias only.

struct Conv2d {
  Tensor w;  // [C_out, C_in, k, k]
  Tensor b;  // [C_out]
  int stride = 1;
  int pad = 0;

  static Conv2d create(int c_out, int c_in, int k, int stride, int pad,
                       SplitMix64& rng) {
    Conv2d layer;
    layer.w = Tensor::uniform_init({c_out, c_in, k, k}, c_in * k * k, rng);
    layer.b = Tensor::zeros({c_out}).set_requires_grad(true);
    layer.stride = stride;
    layer.pad = pad;
    return layer;
  }

  Tensor operator()(const Tensor& x) const {
    return add_bias(conv2d(x, w, stride, pad), b);
  }
};

struct Deconv2d {
  Tensor w;  // [C_in, C_out, k, k]
  Tensor b;  // [C_out]
  int stride = 1;
  int pad = 0;

  static Deconv2d create(int c_in, int c_out, int k, int stride, int pad,
                         SplitMix64& rng) {
    Deconv2d layer;
    layer.w = Tensor::uniform_init({c_in, c_out, k, k}, c_in * k * k, rng);
    layer.b = Tensor::zeros({c_out}).set_requires_grad(true);
    layer.stride = stride;
    layer.pad = pad;
    return layer;
  }

  Tensor operator()(const Tensor& x) const {
    return add_bias(deconv2d(x, w, stride, pad), b);
  }
};

struct LinearLayer {
  Tensor w;  // [out, in]
  Tensor b;  // [out]

  static LinearLayer create(int out, int in, SplitMix64& rng) {
    LinearLayer layer;
    layer.w = Tensor::uniform_init({out, in}, in, rng);
    layer.b = Tensor::zeros({out}).set_requires_grad(true);
    return layer;
  }

  Tensor operator()(const Tensor& x) const { return linear(w, x, b); }
};

}  // namespace sepstereo
