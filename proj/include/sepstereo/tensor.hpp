// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sepstereo {

// SplitMix64 generator. Constants are the published reference ones; kept
// verbatim so seeded runs reproduce bit-exactly everywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 24 mantissa bits, so the value is exact in f32.
  float uniform() { return static_cast<float>(next() >> 40) * 0x1.0p-24f; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_;
};

struct TensorImpl;
using TensorImplPtr = std::shared_ptr<TensorImpl>;

// Buffers of all graph leaves, promoted to f64, keyed by node. Used by the
// finite-difference replay in gradcheck().
using ReplayFn =
    std::function<void(const std::vector<const std::vector<double>*>&,
                       std::vector<double>&)>;

struct TensorImpl {
  std::vector<int> shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until first use
  bool requires_grad = false;
  std::vector<TensorImplPtr> parents;
  std::function<void()> backward_fn;  // reads this->grad, accumulates parents
  ReplayFn replay64;                  // recomputes data from parent f64 buffers
  std::string op_name;

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  void ensure_grad();
};

// Dense f32 tensor handle. Copying copies the handle, not the buffer; ops
// record enough on the graph for reverse-mode backward() and for a
// double-precision replay of the forward pass.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(TensorImplPtr impl) : impl_(std::move(impl)) {}

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, float value);
  static Tensor from_data(std::vector<int> shape, std::vector<float> data);
  // Uniform in +-sqrt(1/fan_in); the usual fan-in init, paper is silent.
  static Tensor uniform_init(std::vector<int> shape, int fan_in,
                             SplitMix64& rng);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const;
  int dim(int i) const;
  std::int64_t numel() const;

  std::span<float> data();
  std::span<const float> data() const;
  std::span<float> grad();
  std::span<const float> grad() const;
  bool has_grad() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);
  void zero_grad();

  float item() const;  // scalar tensors only

  // Reverse-mode sweep from a scalar node; visits nodes in reverse
  // topological order and sums gradients across consumers.
  void backward() const;

  // Same values, detached from the graph.
  Tensor detach() const;

  TensorImpl* impl() const { return impl_.get(); }
  const TensorImplPtr& impl_ptr() const { return impl_; }

 private:
  TensorImplPtr impl_;
};

// -------- elementwise / reduction ops (all differentiable) --------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float c);
Tensor leaky_relu(const Tensor& x, float slope);
Tensor relu(const Tensor& x);
Tensor concat(const Tensor& a, const Tensor& b, int axis);
// [C,H,W] -> [C]; winner-takes-all subgradient, ties to the lowest index.
Tensor max_pool_spatial_full(const Tensor& x);
// [C,H,W] -> [C,H/2,W/2]; H and W must be even.
Tensor max_pool2x2(const Tensor& x);
// Elementwise max across equally shaped tensors (temporal pooling).
Tensor max_elementwise(const std::vector<Tensor>& xs);
// sum((a-b)^2), accumulated in f64 internally; scalar output.
Tensor mse_sum(const Tensor& a, const Tensor& b);
Tensor sum_all(const Tensor& x);

// -------- structured ops --------
// x: [C_in,H,W], k: [C_out,C_in,kh,kw].
Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int pad);
// x: [C_in,H,W], k: [C_in,C_out,kh,kw]; exact adjoint of conv2d.
Tensor deconv2d(const Tensor& x, const Tensor& k, int stride, int pad);
// x: [C,H,W], kernels: [N,C]; kernels are data, not parameters.
Tensor conv1x1_dynamic(const Tensor& x, const Tensor& kernels);
// w: [out,in], x: [in], b: [out] (optional, pass undefined to skip).
Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b);
// x: [C,H,W], b: [C] broadcast over the spatial grid.
Tensor add_bias(const Tensor& x, const Tensor& b);
// fv: [C,H,W], w: [C,N] -> [H*W,N]; row m is visual cell m = y*W + x.
Tensor kernel_transfer(const Tensor& fv, const Tensor& w);
// v: [C] -> [C,H,W] constant over the spatial grid.
Tensor tile_spatial(const Tensor& v, int h, int w);
// v: [C] -> [C,H,W], zero except column (y,x).
Tensor scatter_cell(const Tensor& v, int h, int w, int y, int x);
// Selects index i along the first axis, dropping it: [N,...] -> [...].
Tensor slice_outer(const Tensor& x, int i);

// -------- gradient checking --------
struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::int64_t probes = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;

  bool ok(double tol) const { return max_rel_err < tol; }
};

// Central finite differences against the analytic gradient of `loss`
// (a scalar). The numeric side replays the recorded graph in f64, so the
// comparison is not limited by f32 rounding of the loss. `max_probes` == 0
// probes every element; otherwise a deterministic stride-spread subset.
GradCheckReport gradcheck(const Tensor& loss,
                          const std::vector<std::pair<std::string, Tensor>>& inputs,
                          double eps = 1e-3, int max_probes = 0);

// -------- optimizer --------
struct AdamConfig {
  float lr = 5e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  void zero_grad();
  // One update from the currently accumulated gradients, scaled by
  // 1/grad_scale (the accumulation count).
  void step(float grad_scale = 1.0f);

  std::int64_t t() const { return t_; }
  void set_t(std::int64_t t) { t_ = t; }
  std::span<float> moment1(std::size_t i) { return m_[i]; }
  std::span<float> moment2(std::size_t i) { return v_[i]; }
  std::size_t size() const { return params_.size(); }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> params_;
  std::vector<std::vector<float>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace sepstereo
