// Copyright 2026 The sepstereo authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "sepstereo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace sepstereo {

namespace {

std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

void validate_shape(const std::vector<int>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must be non-empty");
  for (int d : shape)
    if (d <= 0) throw std::invalid_argument("tensor dims must be positive, got " + shape_str(shape));
}

template <typename T>
void check_finite(std::span<const T> v, const char* what) {
  for (T x : v)
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("non-finite value in ") + what);
}

[[noreturn]] void shape_error(const char* op, const std::vector<int>& a,
                              const std::vector<int>& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              shape_str(a) + " vs " + shape_str(b));
}

// ---------------------------------------------------------------- kernels
// Row-major GEMM trio shared by conv/deconv/matmul-style ops. The inner
// loops run over the contiguous dimension so the compiler can vectorize.

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::int64_t>(m) * n, T(0));
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::int64_t>(i) * n;
    for (int t = 0; t < k; ++t) {
      const T av = a[static_cast<std::int64_t>(i) * k + t];
      if (av == T(0)) continue;
      const T* brow = b + static_cast<std::int64_t>(t) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m,n] += a^T b with a stored [k,m].
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::int64_t>(m) * n, T(0));
  for (int t = 0; t < k; ++t) {
    const T* arow = a + static_cast<std::int64_t>(t) * m;
    const T* brow = b + static_cast<std::int64_t>(t) * n;
    for (int i = 0; i < m; ++i) {
      const T av = arow[i];
      if (av == T(0)) continue;
      T* crow = c + static_cast<std::int64_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m,n] += a b^T with b stored [n,k].
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::int64_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::int64_t>(j) * k;
      T acc = 0;
      for (int t = 0; t < k; ++t) acc += arow[t] * brow[t];
      T& dst = c[static_cast<std::int64_t>(i) * n + j];
      dst = accumulate ? dst + acc : acc;
    }
  }
}

struct ConvGeom {
  int c_img, h_img, w_img;  // the dense image side of the lowering
  int kh, kw, stride, pad;
  int h_out, w_out;  // the strided grid side

  std::int64_t cols_rows() const { return static_cast<std::int64_t>(c_img) * kh * kw; }
  std::int64_t cols_cols() const { return static_cast<std::int64_t>(h_out) * w_out; }
};

// img [C,H,W] -> cols [(C*kh*kw), (h_out*w_out)] with zero padding.
template <typename T>
void im2col(const T* img, const ConvGeom& g, T* cols) {
  const std::int64_t p = g.cols_cols();
  for (int c = 0; c < g.c_img; ++c) {
    const T* plane = img + static_cast<std::int64_t>(c) * g.h_img * g.w_img;
    for (int u = 0; u < g.kh; ++u) {
      for (int v = 0; v < g.kw; ++v) {
        T* row = cols + ((static_cast<std::int64_t>(c) * g.kh + u) * g.kw + v) * p;
        std::int64_t idx = 0;
        for (int ph = 0; ph < g.h_out; ++ph) {
          const int ih = ph * g.stride + u - g.pad;
          if (ih < 0 || ih >= g.h_img) {
            for (int pw = 0; pw < g.w_out; ++pw) row[idx++] = T(0);
            continue;
          }
          const T* line = plane + static_cast<std::int64_t>(ih) * g.w_img;
          for (int pw = 0; pw < g.w_out; ++pw) {
            const int iw = pw * g.stride + v - g.pad;
            row[idx++] = (iw < 0 || iw >= g.w_img) ? T(0) : line[iw];
          }
        }
      }
    }
  }
}

// Adjoint scatter of im2col; accumulates into img.
template <typename T>
void col2im(const T* cols, const ConvGeom& g, T* img) {
  const std::int64_t p = g.cols_cols();
  for (int c = 0; c < g.c_img; ++c) {
    T* plane = img + static_cast<std::int64_t>(c) * g.h_img * g.w_img;
    for (int u = 0; u < g.kh; ++u) {
      for (int v = 0; v < g.kw; ++v) {
        const T* row = cols + ((static_cast<std::int64_t>(c) * g.kh + u) * g.kw + v) * p;
        std::int64_t idx = 0;
        for (int ph = 0; ph < g.h_out; ++ph) {
          const int ih = ph * g.stride + u - g.pad;
          if (ih < 0 || ih >= g.h_img) {
            idx += g.w_out;
            continue;
          }
          T* line = plane + static_cast<std::int64_t>(ih) * g.w_img;
          for (int pw = 0; pw < g.w_out; ++pw) {
            const int iw = pw * g.stride + v - g.pad;
            if (iw >= 0 && iw < g.w_img) line[iw] += row[idx];
            ++idx;
          }
        }
      }
    }
  }
}

// y [C_out, h_out*w_out] = kmat [C_out, C_in*kh*kw] * im2col(x).
template <typename T>
void conv2d_fwd(const T* x, const T* k, const ConvGeom& g, int c_out, T* y,
                std::vector<T>& scratch) {
  scratch.resize(g.cols_rows() * g.cols_cols());
  im2col(x, g, scratch.data());
  gemm_nn(k, scratch.data(), y, c_out, static_cast<int>(g.cols_rows()),
          static_cast<int>(g.cols_cols()), false);
}

// y [C_out, H'', W''] via the transposed lowering: cols = kmat2^T * xmat,
// then scatter. kmat2 is k reshaped [C_in, C_out*kh*kw].
template <typename T>
void deconv2d_fwd(const T* x, const T* k, const ConvGeom& g, int c_in, T* y,
                  std::vector<T>& scratch) {
  scratch.resize(g.cols_rows() * g.cols_cols());
  gemm_tn(k, x, scratch.data(), static_cast<int>(g.cols_rows()), c_in,
          static_cast<int>(g.cols_cols()), false);
  std::fill(y, y + static_cast<std::int64_t>(g.c_img) * g.h_img * g.w_img, T(0));
  col2im(scratch.data(), g, y);
}

// ------------------------------------------------------------ graph plumbing

Tensor make_node(std::vector<int> shape, std::vector<float> data,
                 std::vector<TensorImplPtr> parents, const char* op_name,
                 std::function<void()> backward_fn, ReplayFn replay64) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->op_name = op_name;
  check_finite<float>(impl->data, op_name);
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->requires_grad;
  impl->requires_grad = needs;
  impl->parents = std::move(parents);
  if (needs) impl->backward_fn = std::move(backward_fn);
  impl->replay64 = std::move(replay64);
  return Tensor(std::move(impl));
}

std::vector<TensorImpl*> topo_order(TensorImpl* root) {
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  // Iterative post-order DFS; graphs can be deep at full clip length.
  std::vector<std::pair<TensorImpl*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void TensorImpl::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0f);
}

// ------------------------------------------------------------------ Tensor

Tensor Tensor::zeros(std::vector<int> shape) {
  validate_shape(shape);
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(shape_numel(shape), 0.0f);
  impl->shape = std::move(shape);
  impl->op_name = "leaf";
  return Tensor(std::move(impl));
}

Tensor Tensor::full(std::vector<int> shape, float value) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.impl()->data.begin(), t.impl()->data.end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> data) {
  validate_shape(shape);
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw std::invalid_argument("from_data: " + shape_str(shape) + " wants " +
                                std::to_string(shape_numel(shape)) + " values, got " +
                                std::to_string(data.size()));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->op_name = "leaf";
  check_finite<float>(impl->data, "from_data");
  return Tensor(std::move(impl));
}

Tensor Tensor::uniform_init(std::vector<int> shape, int fan_in, SplitMix64& rng) {
  if (fan_in <= 0) throw std::invalid_argument("uniform_init: fan_in must be positive");
  Tensor t = zeros(std::move(shape));
  const float bound = std::sqrt(1.0f / static_cast<float>(fan_in));
  for (float& x : t.impl()->data) x = rng.uniform(-bound, bound);
  t.set_requires_grad(true);
  return t;
}

const std::vector<int>& Tensor::shape() const { return impl_->shape; }
int Tensor::dim(int i) const { return impl_->shape.at(i); }
std::int64_t Tensor::numel() const { return impl_->numel(); }

std::span<float> Tensor::data() { return impl_->data; }
std::span<const float> Tensor::data() const { return impl_->data; }

std::span<float> Tensor::grad() {
  impl_->ensure_grad();
  return impl_->grad;
}

std::span<const float> Tensor::grad() const {
  impl_->ensure_grad();
  return impl_->grad;
}

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  impl_->requires_grad = value;
  return *this;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

float Tensor::item() const {
  if (numel() != 1) throw std::logic_error("item(): tensor is not scalar");
  return impl_->data[0];
}

void Tensor::backward() const {
  if (numel() != 1) throw std::logic_error("backward(): root must be scalar");
  auto order = topo_order(impl_.get());
  impl_->ensure_grad();
  impl_->grad[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->requires_grad && node->backward_fn && !node->grad.empty())
      node->backward_fn();
  }
  for (TensorImpl* node : order)
    if (!node->grad.empty()) check_finite<float>(std::span<const float>(node->grad), "backward");
}

Tensor Tensor::detach() const {
  return Tensor::from_data(impl_->shape, impl_->data);
}

// -------------------------------------------------------------- op helpers

namespace {

// Copies parent f64 buffers in declaration order; shared by simple replays.
const std::vector<double>& pbuf(const std::vector<const std::vector<double>*>& ps,
                                std::size_t i) {
  return *ps[i];
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  std::vector<float> out(a.numel());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a.data()[i] + b.data()[i];
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  Tensor r = make_node(
      a.shape(), std::move(out), {a.impl_ptr(), b.impl_ptr()}, "add", nullptr,
      [](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& x = pbuf(ps, 0);
        const auto& y = pbuf(ps, 1);
        out64.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out64[i] = x[i] + y[i];
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, ai, bi]() {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (std::size_t i = 0; i < ri->grad.size(); ++i) ai->grad[i] += ri->grad[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (std::size_t i = 0; i < ri->grad.size(); ++i) bi->grad[i] += ri->grad[i];
      }
    };
  return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  std::vector<float> out(a.numel());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a.data()[i] - b.data()[i];
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  Tensor r = make_node(
      a.shape(), std::move(out), {a.impl_ptr(), b.impl_ptr()}, "sub", nullptr,
      [](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& x = pbuf(ps, 0);
        const auto& y = pbuf(ps, 1);
        out64.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out64[i] = x[i] - y[i];
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, ai, bi]() {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (std::size_t i = 0; i < ri->grad.size(); ++i) ai->grad[i] += ri->grad[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (std::size_t i = 0; i < ri->grad.size(); ++i) bi->grad[i] -= ri->grad[i];
      }
    };
  return r;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::vector<float> out(a.numel());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a.data()[i] * b.data()[i];
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  Tensor r = make_node(
      a.shape(), std::move(out), {a.impl_ptr(), b.impl_ptr()}, "mul", nullptr,
      [](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& x = pbuf(ps, 0);
        const auto& y = pbuf(ps, 1);
        out64.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out64[i] = x[i] * y[i];
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, ai, bi]() {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (std::size_t i = 0; i < ri->grad.size(); ++i)
          ai->grad[i] += ri->grad[i] * bi->data[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (std::size_t i = 0; i < ri->grad.size(); ++i)
          bi->grad[i] += ri->grad[i] * ai->data[i];
      }
    };
  return r;
}

Tensor scale(const Tensor& a, float c) {
  std::vector<float> out(a.numel());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a.data()[i] * c;
  TensorImpl* ai = a.impl();
  Tensor r = make_node(
      a.shape(), std::move(out), {a.impl_ptr()}, "scale", nullptr,
      [c](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& x = pbuf(ps, 0);
        out64.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out64[i] = x[i] * static_cast<double>(c);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, ai, c]() {
      ai->ensure_grad();
      for (std::size_t i = 0; i < ri->grad.size(); ++i) ai->grad[i] += ri->grad[i] * c;
    };
  return r;
}

Tensor leaky_relu(const Tensor& x, float slope) {
  std::vector<float> out(x.numel());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const float v = x.data()[i];
    out[i] = v > 0.0f ? v : slope * v;
  }
  TensorImpl* xi = x.impl();
  Tensor r = make_node(
      x.shape(), std::move(out), {x.impl_ptr()}, "leaky_relu", nullptr,
      [slope](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& v = pbuf(ps, 0);
        out64.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
          out64[i] = v[i] > 0.0 ? v[i] : static_cast<double>(slope) * v[i];
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi, slope]() {
      xi->ensure_grad();
      for (std::size_t i = 0; i < ri->grad.size(); ++i)
        xi->grad[i] += ri->grad[i] * (xi->data[i] > 0.0f ? 1.0f : slope);
    };
  return r;
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0f); }

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != sb.size() || axis < 0 || axis >= static_cast<int>(sa.size()))
    throw std::invalid_argument("concat: invalid axis " + std::to_string(axis));
  for (std::size_t i = 0; i < sa.size(); ++i)
    if (static_cast<int>(i) != axis && sa[i] != sb[i]) shape_error("concat", sa, sb);

  std::vector<int> shape = sa;
  shape[axis] += sb[axis];
  std::int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= sa[i];
  const std::int64_t inner_a = a.numel() / outer;
  const std::int64_t inner_b = b.numel() / outer;

  std::vector<float> out(a.numel() + b.numel());
  for (std::int64_t o = 0; o < outer; ++o) {
    std::copy_n(a.data().data() + o * inner_a, inner_a,
                out.data() + o * (inner_a + inner_b));
    std::copy_n(b.data().data() + o * inner_b, inner_b,
                out.data() + o * (inner_a + inner_b) + inner_a);
  }
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  Tensor r = make_node(
      std::move(shape), std::move(out), {a.impl_ptr(), b.impl_ptr()}, "concat", nullptr,
      [outer, inner_a, inner_b](const std::vector<const std::vector<double>*>& ps,
                                std::vector<double>& out64) {
        const auto& x = pbuf(ps, 0);
        const auto& y = pbuf(ps, 1);
        out64.resize(x.size() + y.size());
        for (std::int64_t o = 0; o < outer; ++o) {
          std::copy_n(x.data() + o * inner_a, inner_a,
                      out64.data() + o * (inner_a + inner_b));
          std::copy_n(y.data() + o * inner_b, inner_b,
                      out64.data() + o * (inner_a + inner_b) + inner_a);
        }
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, ai, bi, outer, inner_a, inner_b]() {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (std::int64_t o = 0; o < outer; ++o)
          for (std::int64_t i = 0; i < inner_a; ++i)
            ai->grad[o * inner_a + i] += ri->grad[o * (inner_a + inner_b) + i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (std::int64_t o = 0; o < outer; ++o)
          for (std::int64_t i = 0; i < inner_b; ++i)
            bi->grad[o * inner_b + i] += ri->grad[o * (inner_a + inner_b) + inner_a + i];
      }
    };
  return r;
}

namespace {

void expect_rank(const Tensor& t, int rank, const char* op) {
  if (static_cast<int>(t.shape().size()) != rank)
    throw std::invalid_argument(std::string(op) + ": expected rank " +
                                std::to_string(rank) + ", got " + shape_str(t.shape()));
}

}  // namespace

Tensor max_pool_spatial_full(const Tensor& x) {
  expect_rank(x, 3, "max_pool_spatial_full");
  const int c = x.dim(0);
  const std::int64_t hw = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
  std::vector<float> out(c);
  std::vector<std::int64_t> winners(c);
  for (int ch = 0; ch < c; ++ch) {
    const float* plane = x.data().data() + ch * hw;
    std::int64_t best = 0;
    for (std::int64_t i = 1; i < hw; ++i)
      if (plane[i] > plane[best]) best = i;  // ties keep the lowest index
    winners[ch] = best;
    out[ch] = plane[best];
  }
  TensorImpl* xi = x.impl();
  Tensor r = make_node(
      {c}, std::move(out), {x.impl_ptr()}, "max_pool_spatial_full", nullptr,
      [c, hw](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& v = pbuf(ps, 0);
        out64.resize(c);
        for (int ch = 0; ch < c; ++ch) {
          const double* plane = v.data() + ch * hw;
          double best = plane[0];
          for (std::int64_t i = 1; i < hw; ++i) best = std::max(best, plane[i]);
          out64[ch] = best;
        }
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi, winners = std::move(winners), hw]() {
      xi->ensure_grad();
      for (std::size_t ch = 0; ch < ri->grad.size(); ++ch)
        xi->grad[ch * hw + winners[ch]] += ri->grad[ch];
    };
  return r;
}

Tensor max_pool2x2(const Tensor& x) {
  expect_rank(x, 3, "max_pool2x2");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 || w % 2)
    throw std::invalid_argument("max_pool2x2: spatial dims must be even, got " +
                                shape_str(x.shape()));
  const int ho = h / 2, wo = w / 2;
  std::vector<float> out(static_cast<std::int64_t>(c) * ho * wo);
  std::vector<std::int64_t> winners(out.size());
  const float* in = x.data().data();
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j) {
        std::int64_t best = (static_cast<std::int64_t>(ch) * h + 2 * i) * w + 2 * j;
        // scan order (0,0),(0,1),(1,0),(1,1); strict > keeps lowest index on ties
        for (int du = 0; du < 2; ++du)
          for (int dv = 0; dv < 2; ++dv) {
            const std::int64_t idx =
                (static_cast<std::int64_t>(ch) * h + 2 * i + du) * w + 2 * j + dv;
            if (in[idx] > in[best]) best = idx;
          }
        const std::int64_t o = (static_cast<std::int64_t>(ch) * ho + i) * wo + j;
        winners[o] = best;
        out[o] = in[best];
      }
  TensorImpl* xi = x.impl();
  Tensor r = make_node(
      {c, ho, wo}, std::move(out), {x.impl_ptr()}, "max_pool2x2", nullptr,
      [c, h, w, ho, wo](const std::vector<const std::vector<double>*>& ps,
                        std::vector<double>& out64) {
        const auto& v = pbuf(ps, 0);
        out64.resize(static_cast<std::int64_t>(c) * ho * wo);
        for (int ch = 0; ch < c; ++ch)
          for (int i = 0; i < ho; ++i)
            for (int j = 0; j < wo; ++j) {
              double best = v[(static_cast<std::int64_t>(ch) * h + 2 * i) * w + 2 * j];
              for (int du = 0; du < 2; ++du)
                for (int dv = 0; dv < 2; ++dv)
                  best = std::max(best, v[(static_cast<std::int64_t>(ch) * h + 2 * i + du) * w +
                                          2 * j + dv]);
              out64[(static_cast<std::int64_t>(ch) * ho + i) * wo + j] = best;
            }
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi, winners = std::move(winners)]() {
      xi->ensure_grad();
      for (std::size_t o = 0; o < ri->grad.size(); ++o)
        xi->grad[winners[o]] += ri->grad[o];
    };
  return r;
}

Tensor max_elementwise(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("max_elementwise: empty input list");
  for (const Tensor& t : xs)
    if (t.shape() != xs[0].shape()) shape_error("max_elementwise", xs[0].shape(), t.shape());
  const std::int64_t n = xs[0].numel();
  std::vector<float> out(n);
  std::vector<std::int32_t> winners(n, 0);
  for (std::int64_t i = 0; i < n; ++i) out[i] = xs[0].data()[i];
  for (std::size_t t = 1; t < xs.size(); ++t)
    for (std::int64_t i = 0; i < n; ++i)
      if (xs[t].data()[i] > out[i]) {  // first occurrence wins ties
        out[i] = xs[t].data()[i];
        winners[i] = static_cast<std::int32_t>(t);
      }
  std::vector<TensorImplPtr> parents;
  std::vector<TensorImpl*> raw;
  for (const Tensor& t : xs) {
    parents.push_back(t.impl_ptr());
    raw.push_back(t.impl());
  }
  Tensor r = make_node(
      xs[0].shape(), std::move(out), std::move(parents), "max_elementwise", nullptr,
      [n](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        out64.assign(pbuf(ps, 0).begin(), pbuf(ps, 0).end());
        for (std::size_t t = 1; t < ps.size(); ++t)
          for (std::int64_t i = 0; i < n; ++i)
            out64[i] = std::max(out64[i], pbuf(ps, t)[i]);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, raw = std::move(raw), winners = std::move(winners)]() {
      for (std::size_t i = 0; i < ri->grad.size(); ++i) {
        TensorImpl* src = raw[winners[i]];
        if (!src->requires_grad) continue;
        src->ensure_grad();
        src->grad[i] += ri->grad[i];
      }
    };
  return r;
}

Tensor mse_sum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mse_sum", a.shape(), b.shape());
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
    acc += d * d;
  }
  TensorImpl* ai = a.impl();
  TensorImpl* bi = b.impl();
  Tensor r = make_node(
      {1}, {static_cast<float>(acc)}, {a.impl_ptr(), b.impl_ptr()}, "mse_sum", nullptr,
      [](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& x = pbuf(ps, 0);
        const auto& y = pbuf(ps, 1);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        out64.assign(1, s);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, ai, bi]() {
      const float g = ri->grad[0];
      if (ai->requires_grad) ai->ensure_grad();
      if (bi->requires_grad) bi->ensure_grad();
      for (std::size_t i = 0; i < ai->data.size(); ++i) {
        const float d = 2.0f * (ai->data[i] - bi->data[i]) * g;
        if (ai->requires_grad) ai->grad[i] += d;
        if (bi->requires_grad) bi->grad[i] -= d;
      }
    };
  return r;
}

Tensor sum_all(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  TensorImpl* xi = x.impl();
  Tensor r = make_node(
      {1}, {static_cast<float>(acc)}, {x.impl_ptr()}, "sum_all", nullptr,
      [](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        double s = 0.0;
        for (double v : pbuf(ps, 0)) s += v;
        out64.assign(1, s);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi]() {
      xi->ensure_grad();
      const float g = ri->grad[0];
      for (float& v : xi->grad) v += g;
    };
  return r;
}

// ------------------------------------------------------------- conv family

Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int pad) {
  expect_rank(x, 3, "conv2d");
  expect_rank(k, 4, "conv2d kernel");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
  const int c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int c_out = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  if (k.dim(1) != c_in) shape_error("conv2d", x.shape(), k.shape());
  if (h + 2 * pad < kh || w + 2 * pad < kw)
    throw std::invalid_argument("conv2d: kernel larger than padded input");
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (w + 2 * pad - kw) / stride + 1;
  if (ho <= 0 || wo <= 0) throw std::invalid_argument("conv2d: zero-size output");

  const ConvGeom g{c_in, h, w, kh, kw, stride, pad, ho, wo};
  std::vector<float> out(static_cast<std::int64_t>(c_out) * ho * wo);
  std::vector<float> scratch;
  conv2d_fwd(x.data().data(), k.data().data(), g, c_out, out.data(), scratch);

  TensorImpl* xi = x.impl();
  TensorImpl* ki = k.impl();
  Tensor r = make_node(
      {c_out, ho, wo}, std::move(out), {x.impl_ptr(), k.impl_ptr()}, "conv2d", nullptr,
      [g, c_out](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        out64.resize(static_cast<std::int64_t>(c_out) * g.h_out * g.w_out);
        std::vector<double> scratch64;
        conv2d_fwd(pbuf(ps, 0).data(), pbuf(ps, 1).data(), g, c_out, out64.data(), scratch64);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi, ki, g, c_out]() {
      const std::int64_t p = g.cols_cols();
      std::vector<float> cols(g.cols_rows() * p);
      if (ki->requires_grad || xi->requires_grad) im2col(xi->data.data(), g, cols.data());
      if (ki->requires_grad) {
        ki->ensure_grad();
        gemm_nt(ri->grad.data(), cols.data(), ki->grad.data(), c_out,
                static_cast<int>(p), static_cast<int>(g.cols_rows()), true);
      }
      if (xi->requires_grad) {
        xi->ensure_grad();
        gemm_tn(ki->data.data(), ri->grad.data(), cols.data(),
                static_cast<int>(g.cols_rows()), c_out, static_cast<int>(p), false);
        col2im(cols.data(), g, xi->grad.data());
      }
    };
  return r;
}

Tensor deconv2d(const Tensor& x, const Tensor& k, int stride, int pad) {
  expect_rank(x, 3, "deconv2d");
  expect_rank(k, 4, "deconv2d kernel");
  if (stride < 1 || pad < 0) throw std::invalid_argument("deconv2d: bad stride/pad");
  const int c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int c_out = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  if (k.dim(0) != c_in) shape_error("deconv2d", x.shape(), k.shape());
  const int ho = (h - 1) * stride - 2 * pad + kh;
  const int wo = (w - 1) * stride - 2 * pad + kw;
  if (ho <= 0 || wo <= 0) throw std::invalid_argument("deconv2d: zero-size output");

  // The "image" side of the lowering is the deconv output grid.
  const ConvGeom g{c_out, ho, wo, kh, kw, stride, pad, h, w};
  std::vector<float> out(static_cast<std::int64_t>(c_out) * ho * wo);
  std::vector<float> scratch;
  deconv2d_fwd(x.data().data(), k.data().data(), g, c_in, out.data(), scratch);

  TensorImpl* xi = x.impl();
  TensorImpl* ki = k.impl();
  Tensor r = make_node(
      {c_out, ho, wo}, std::move(out), {x.impl_ptr(), k.impl_ptr()}, "deconv2d", nullptr,
      [g, c_in](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        out64.resize(static_cast<std::int64_t>(g.c_img) * g.h_img * g.w_img);
        std::vector<double> scratch64;
        deconv2d_fwd(pbuf(ps, 0).data(), pbuf(ps, 1).data(), g, c_in, out64.data(), scratch64);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi, ki, g, c_in]() {
      const std::int64_t p = g.cols_cols();
      std::vector<float> cols(g.cols_rows() * p);
      im2col(ri->grad.data(), g, cols.data());
      if (xi->requires_grad) {
        xi->ensure_grad();
        gemm_nn(ki->data.data(), cols.data(), xi->grad.data(), c_in,
                static_cast<int>(g.cols_rows()), static_cast<int>(p), true);
      }
      if (ki->requires_grad) {
        ki->ensure_grad();
        gemm_nt(xi->data.data(), cols.data(), ki->grad.data(), c_in,
                static_cast<int>(p), static_cast<int>(g.cols_rows()), true);
      }
    };
  return r;
}

Tensor conv1x1_dynamic(const Tensor& x, const Tensor& kernels) {
  expect_rank(x, 3, "conv1x1_dynamic");
  expect_rank(kernels, 2, "conv1x1_dynamic kernels");
  const int c = x.dim(0);
  const int n = kernels.dim(0);
  if (kernels.dim(1) != c)
    throw std::invalid_argument("conv1x1_dynamic: channel mismatch, input " +
                                shape_str(x.shape()) + " kernels " +
                                shape_str(kernels.shape()));
  const int h = x.dim(1), w = x.dim(2);
  const int p = h * w;
  std::vector<float> out(static_cast<std::int64_t>(n) * p);
  gemm_nn(kernels.data().data(), x.data().data(), out.data(), n, c, p, false);

  TensorImpl* xi = x.impl();
  TensorImpl* ki = kernels.impl();
  Tensor r = make_node(
      {n, h, w}, std::move(out), {x.impl_ptr(), kernels.impl_ptr()}, "conv1x1_dynamic",
      nullptr,
      [n, c, p](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        out64.resize(static_cast<std::int64_t>(n) * p);
        gemm_nn(pbuf(ps, 1).data(), pbuf(ps, 0).data(), out64.data(), n, c, p, false);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi, ki, n, c, p]() {
      if (xi->requires_grad) {
        xi->ensure_grad();
        gemm_tn(ki->data.data(), ri->grad.data(), xi->grad.data(), c, n, p, true);
      }
      if (ki->requires_grad) {
        ki->ensure_grad();
        gemm_nt(ri->grad.data(), xi->data.data(), ki->grad.data(), n, p, c, true);
      }
    };
  return r;
}

Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b) {
  expect_rank(w, 2, "linear weight");
  expect_rank(x, 1, "linear input");
  const int out_dim = w.dim(0), in_dim = w.dim(1);
  if (x.dim(0) != in_dim) shape_error("linear", w.shape(), x.shape());
  if (b.defined() && (b.shape().size() != 1 || b.dim(0) != out_dim))
    shape_error("linear bias", w.shape(), b.shape());

  std::vector<float> out(out_dim);
  for (int i = 0; i < out_dim; ++i) {
    float acc = b.defined() ? b.data()[i] : 0.0f;
    const float* row = w.data().data() + static_cast<std::int64_t>(i) * in_dim;
    for (int j = 0; j < in_dim; ++j) acc += row[j] * x.data()[j];
    out[i] = acc;
  }
  std::vector<TensorImplPtr> parents{w.impl_ptr(), x.impl_ptr()};
  if (b.defined()) parents.push_back(b.impl_ptr());
  TensorImpl* wi = w.impl();
  TensorImpl* xi = x.impl();
  TensorImpl* bi = b.defined() ? b.impl() : nullptr;
  const bool has_bias = b.defined();
  Tensor r = make_node(
      {out_dim}, std::move(out), std::move(parents), "linear", nullptr,
      [out_dim, in_dim, has_bias](const std::vector<const std::vector<double>*>& ps,
                                  std::vector<double>& out64) {
        out64.resize(out_dim);
        for (int i = 0; i < out_dim; ++i) {
          double acc = has_bias ? pbuf(ps, 2)[i] : 0.0;
          for (int j = 0; j < in_dim; ++j)
            acc += pbuf(ps, 0)[static_cast<std::int64_t>(i) * in_dim + j] * pbuf(ps, 1)[j];
          out64[i] = acc;
        }
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, wi, xi, bi, out_dim, in_dim]() {
      for (int i = 0; i < out_dim; ++i) {
        const float g = ri->grad[i];
        if (wi->requires_grad) {
          wi->ensure_grad();
          for (int j = 0; j < in_dim; ++j)
            wi->grad[static_cast<std::int64_t>(i) * in_dim + j] += g * xi->data[j];
        }
        if (xi->requires_grad) {
          xi->ensure_grad();
          for (int j = 0; j < in_dim; ++j)
            xi->grad[j] += g * wi->data[static_cast<std::int64_t>(i) * in_dim + j];
        }
        if (bi && bi->requires_grad) {
          bi->ensure_grad();
          bi->grad[i] += g;
        }
      }
    };
  return r;
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  expect_rank(x, 3, "add_bias");
  expect_rank(b, 1, "add_bias bias");
  const int c = x.dim(0);
  if (b.dim(0) != c) shape_error("add_bias", x.shape(), b.shape());
  const std::int64_t hw = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
  std::vector<float> out(x.numel());
  for (int ch = 0; ch < c; ++ch)
    for (std::int64_t i = 0; i < hw; ++i)
      out[ch * hw + i] = x.data()[ch * hw + i] + b.data()[ch];
  TensorImpl* xi = x.impl();
  TensorImpl* bi = b.impl();
  Tensor r = make_node(
      x.shape(), std::move(out), {x.impl_ptr(), b.impl_ptr()}, "add_bias", nullptr,
      [c, hw](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& v = pbuf(ps, 0);
        const auto& bb = pbuf(ps, 1);
        out64.resize(v.size());
        for (int ch = 0; ch < c; ++ch)
          for (std::int64_t i = 0; i < hw; ++i) out64[ch * hw + i] = v[ch * hw + i] + bb[ch];
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi, bi, c, hw]() {
      if (xi->requires_grad) {
        xi->ensure_grad();
        for (std::size_t i = 0; i < ri->grad.size(); ++i) xi->grad[i] += ri->grad[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (int ch = 0; ch < c; ++ch) {
          float acc = 0.0f;
          for (std::int64_t i = 0; i < hw; ++i) acc += ri->grad[ch * hw + i];
          bi->grad[ch] += acc;
        }
      }
    };
  return r;
}

Tensor kernel_transfer(const Tensor& fv, const Tensor& w) {
  expect_rank(fv, 3, "kernel_transfer visual map");
  expect_rank(w, 2, "kernel_transfer weight");
  const int c = fv.dim(0);
  const int hw = fv.dim(1) * fv.dim(2);
  const int n = w.dim(1);
  if (w.dim(0) != c) shape_error("kernel_transfer", fv.shape(), w.shape());

  // fv is [C, h, w] row-major, i.e. already [C, h*w]; K = fv^T * w.
  std::vector<float> out(static_cast<std::int64_t>(hw) * n);
  gemm_tn(fv.data().data(), w.data().data(), out.data(), hw, c, n, false);

  TensorImpl* fi = fv.impl();
  TensorImpl* wi = w.impl();
  Tensor r = make_node(
      {hw, n}, std::move(out), {fv.impl_ptr(), w.impl_ptr()}, "kernel_transfer", nullptr,
      [hw, c, n](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        out64.resize(static_cast<std::int64_t>(hw) * n);
        gemm_tn(pbuf(ps, 0).data(), pbuf(ps, 1).data(), out64.data(), hw, c, n, false);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, fi, wi, hw, c, n]() {
      if (fi->requires_grad) {
        fi->ensure_grad();
        gemm_nt(wi->data.data(), ri->grad.data(), fi->grad.data(), c, n, hw, true);
      }
      if (wi->requires_grad) {
        wi->ensure_grad();
        gemm_nn(fi->data.data(), ri->grad.data(), wi->grad.data(), c, hw, n, true);
      }
    };
  return r;
}

Tensor tile_spatial(const Tensor& v, int h, int w) {
  expect_rank(v, 1, "tile_spatial");
  if (h <= 0 || w <= 0) throw std::invalid_argument("tile_spatial: bad grid");
  const int c = v.dim(0);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  std::vector<float> out(c * hw);
  for (int ch = 0; ch < c; ++ch)
    std::fill_n(out.data() + ch * hw, hw, v.data()[ch]);
  TensorImpl* vi = v.impl();
  Tensor r = make_node(
      {c, h, w}, std::move(out), {v.impl_ptr()}, "tile_spatial", nullptr,
      [c, hw](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        out64.resize(c * hw);
        for (int ch = 0; ch < c; ++ch)
          std::fill_n(out64.data() + ch * hw, hw, pbuf(ps, 0)[ch]);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, vi, hw]() {
      vi->ensure_grad();
      for (std::size_t ch = 0; ch < vi->grad.size(); ++ch) {
        float acc = 0.0f;
        for (std::int64_t i = 0; i < hw; ++i) acc += ri->grad[ch * hw + i];
        vi->grad[ch] += acc;
      }
    };
  return r;
}

Tensor scatter_cell(const Tensor& v, int h, int w, int y, int x) {
  expect_rank(v, 1, "scatter_cell");
  if (y < 0 || y >= h || x < 0 || x >= w)
    throw std::invalid_argument("scatter_cell: cell out of range");
  const int c = v.dim(0);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  std::vector<float> out(c * hw, 0.0f);
  for (int ch = 0; ch < c; ++ch) out[ch * hw + y * w + x] = v.data()[ch];
  TensorImpl* vi = v.impl();
  Tensor r = make_node(
      {c, h, w}, std::move(out), {v.impl_ptr()}, "scatter_cell", nullptr,
      [c, hw, w, y, x](const std::vector<const std::vector<double>*>& ps,
                       std::vector<double>& out64) {
        out64.assign(c * hw, 0.0);
        for (int ch = 0; ch < c; ++ch) out64[ch * hw + y * w + x] = pbuf(ps, 0)[ch];
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, vi, hw, w, y, x]() {
      vi->ensure_grad();
      for (std::size_t ch = 0; ch < vi->grad.size(); ++ch)
        vi->grad[ch] += ri->grad[ch * hw + y * w + x];
    };
  return r;
}

Tensor slice_outer(const Tensor& x, int i) {
  if (x.shape().size() < 2)
    throw std::invalid_argument("slice_outer: needs rank >= 2");
  const int n = x.dim(0);
  if (i < 0 || i >= n) throw std::invalid_argument("slice_outer: index out of range");
  std::vector<int> shape(x.shape().begin() + 1, x.shape().end());
  const std::int64_t inner = x.numel() / n;
  std::vector<float> out(x.data().begin() + i * inner,
                         x.data().begin() + (i + 1) * inner);
  TensorImpl* xi = x.impl();
  Tensor r = make_node(
      std::move(shape), std::move(out), {x.impl_ptr()}, "slice_outer", nullptr,
      [i, inner](const std::vector<const std::vector<double>*>& ps, std::vector<double>& out64) {
        const auto& v = pbuf(ps, 0);
        out64.assign(v.begin() + i * inner, v.begin() + (i + 1) * inner);
      });
  TensorImpl* ri = r.impl();
  if (ri->requires_grad)
    ri->backward_fn = [ri, xi, i, inner]() {
      xi->ensure_grad();
      for (std::int64_t j = 0; j < inner; ++j) xi->grad[i * inner + j] += ri->grad[j];
    };
  return r;
}

// --------------------------------------------------------------- gradcheck

GradCheckReport gradcheck(const Tensor& loss,
                          const std::vector<std::pair<std::string, Tensor>>& inputs,
                          double eps, int max_probes) {
  if (loss.numel() != 1) throw std::logic_error("gradcheck: loss must be scalar");
  for (const auto& [name, t] : inputs) {
    if (!t.requires_grad())
      throw std::logic_error("gradcheck: input '" + name + "' does not require grad");
    for (float v : t.data())
      if (std::abs(v) >= 1e3f)
        throw std::invalid_argument("gradcheck: input '" + name + "' out of range");
  }

  for (const auto& [name, t] : inputs) const_cast<Tensor&>(t).zero_grad();
  loss.backward();

  // f64 replay buffers, filled in topological order.
  auto order = topo_order(loss.impl());
  std::unordered_map<TensorImpl*, std::vector<double>> buf;
  auto replay = [&]() {
    for (TensorImpl* node : order) {
      if (node->parents.empty()) continue;  // leaves hold their buffers
      std::vector<const std::vector<double>*> ps;
      ps.reserve(node->parents.size());
      for (const auto& p : node->parents) ps.push_back(&buf[p.get()]);
      node->replay64(ps, buf[node]);
    }
    return buf[loss.impl()][0];
  };
  for (TensorImpl* node : order)
    if (node->parents.empty())
      buf[node].assign(node->data.begin(), node->data.end());

  GradCheckReport report;
  for (const auto& [name, t] : inputs) {
    GradCheckEntry entry;
    entry.name = name;
    std::vector<double>& leaf = buf[t.impl()];
    if (leaf.size() != static_cast<std::size_t>(t.numel()))
      throw std::logic_error("gradcheck: input '" + name + "' is not a graph leaf");
    const std::int64_t n = t.numel();
    std::int64_t step = 1;
    if (max_probes > 0 && n > max_probes) step = (n + max_probes - 1) / max_probes;
    for (std::int64_t i = 0; i < n; i += step) {
      const double saved = leaf[i];
      leaf[i] = saved + eps;
      const double lp = replay();
      leaf[i] = saved - eps;
      const double lm = replay();
      leaf[i] = saved;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double analytic = static_cast<double>(t.grad()[i]);
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
      entry.max_rel_err = std::max(entry.max_rel_err, abs_err / denom);
      ++entry.probes;
    }
    replay();  // restore unperturbed buffers for the next input
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

// -------------------------------------------------------------------- Adam

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : cfg_(cfg), params_(std::move(params)) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].numel(), 0.0f);
    v_[i].assign(params_[i].numel(), 0.0f);
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

void Adam::step(float grad_scale) {
  ++t_;
  const double b1t = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(t_));
  const double b2t = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(t_));
  const float inv_scale = 1.0f / grad_scale;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    std::span<float> g = p.grad();
    std::span<float> d = p.data();
    for (std::size_t j = 0; j < g.size(); ++j) {
      const float gj = g[j] * inv_scale;
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0f - cfg_.beta1) * gj;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0f - cfg_.beta2) * gj * gj;
      const float mhat = m_[i][j] / static_cast<float>(b1t);
      const float vhat = v_[i][j] / static_cast<float>(b2t);
      d[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace sepstereo
