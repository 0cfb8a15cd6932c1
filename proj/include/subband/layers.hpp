// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "subband/error.hpp"
#include "subband/gemm.hpp"
#include "subband/rng.hpp"
#include "subband/tensor.hpp"
#include "subband/thread_pool.hpp"

namespace subband {

/// Stride-1, zero-padded "same" convolution. Weights are (kh, kw, c_in,
/// c_out); that layout doubles as the row-major (kh*kw*c_in) x c_out matrix
/// the im2col kernel multiplies against. Bias is kept as a (1,1,1,c_out)
/// tensor so parameters serialize uniformly.
template <typename T>
struct ConvLayer {
  Tensor4<T> weights;
  Tensor4<T> bias;
  T leak = T(0.1);

  ConvLayer() = default;
  ConvLayer(std::int64_t kh, std::int64_t kw, std::int64_t c_in, std::int64_t c_out, T leak_)
      : weights({kh, kw, c_in, c_out}), bias({1, 1, 1, c_out}), leak(leak_) {
    if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("convolution kernels must be odd-sized");
    if (leak < T(0) || leak > T(1)) throw DomainError("leak must lie in [0, 1]");
  }

  std::int64_t kh() const { return weights.shape().n; }
  std::int64_t kw() const { return weights.shape().h; }
  std::int64_t c_in() const { return weights.shape().w; }
  std::int64_t c_out() const { return weights.shape().c; }
};

struct PoolSpec {
  std::int64_t ph = 2, pw = 2;
  std::int64_t sh = 2, sw = 2;
};

template <typename T>
struct FCLayer {
  Tensor4<T> weights;  // (1, 1, d_in, d_out)
  Tensor4<T> bias;     // (1, 1, 1, d_out)
  T leak = T(0.1);

  FCLayer() = default;
  FCLayer(std::int64_t d_in, std::int64_t d_out, T leak_)
      : weights({1, 1, d_in, d_out}), bias({1, 1, 1, d_out}), leak(leak_) {}

  std::int64_t d_in() const { return weights.shape().w; }
  std::int64_t d_out() const { return weights.shape().c; }
};

namespace detail {

// Gathers the receptive fields of one sample into a (h*w) x (kh*kw*c_in)
// row-major matrix. Out-of-image taps are zero.
template <typename T>
void im2col(const Tensor4<T>& x, std::int64_t n, std::int64_t kh, std::int64_t kw, T* col) {
  const Shape4 s = x.shape();
  const std::int64_t pad_h = (kh - 1) / 2, pad_w = (kw - 1) / 2;
  const std::int64_t k = kh * kw * s.c;
  for (std::int64_t i = 0; i < s.h; ++i) {
    for (std::int64_t j = 0; j < s.w; ++j) {
      T* row = col + (i * s.w + j) * k;
      for (std::int64_t di = 0; di < kh; ++di) {
        const std::int64_t src_i = i + di - pad_h;
        if (src_i < 0 || src_i >= s.h) {
          std::memset(row + di * kw * s.c, 0, static_cast<std::size_t>(kw * s.c) * sizeof(T));
          continue;
        }
        for (std::int64_t dj = 0; dj < kw; ++dj) {
          const std::int64_t src_j = j + dj - pad_w;
          T* dst = row + (di * kw + dj) * s.c;
          if (src_j < 0 || src_j >= s.w) {
            std::memset(dst, 0, static_cast<std::size_t>(s.c) * sizeof(T));
          } else {
            std::memcpy(dst, x.data() + x.index(n, src_i, src_j, 0),
                        static_cast<std::size_t>(s.c) * sizeof(T));
          }
        }
      }
    }
  }
}

// Scatter-add of a (h*w) x (kh*kw*c_in) gradient matrix back into dx.
template <typename T>
void col2im_add(const T* col, std::int64_t kh, std::int64_t kw, Tensor4<T>& dx, std::int64_t n) {
  const Shape4 s = dx.shape();
  const std::int64_t pad_h = (kh - 1) / 2, pad_w = (kw - 1) / 2;
  const std::int64_t k = kh * kw * s.c;
  for (std::int64_t i = 0; i < s.h; ++i) {
    for (std::int64_t j = 0; j < s.w; ++j) {
      const T* row = col + (i * s.w + j) * k;
      for (std::int64_t di = 0; di < kh; ++di) {
        const std::int64_t src_i = i + di - pad_h;
        if (src_i < 0 || src_i >= s.h) continue;
        for (std::int64_t dj = 0; dj < kw; ++dj) {
          const std::int64_t src_j = j + dj - pad_w;
          if (src_j < 0 || src_j >= s.w) continue;
          T* dst = dx.data() + dx.index(n, src_i, src_j, 0);
          const T* src = row + (di * kw + dj) * s.c;
          for (std::int64_t ci = 0; ci < s.c; ++ci) dst[ci] += src[ci];
        }
      }
    }
  }
}

}  // namespace detail

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const ConvLayer<T>& layer) {
  const Shape4 s = x.shape();
  if (s.c != layer.c_in())
    throw ShapeError("conv2d: input has " + std::to_string(s.c) + " channels, layer expects " +
                     std::to_string(layer.c_in()));
  const std::int64_t k = layer.kh() * layer.kw() * s.c;
  const std::int64_t p = s.h * s.w;
  const std::int64_t c_out = layer.c_out();
  Tensor4<T> y({s.n, s.h, s.w, c_out});

  global_pool().parallel_for(s.n, [&](std::int64_t n) {
    std::vector<T> col(static_cast<std::size_t>(p * k));
    detail::im2col(x, n, layer.kh(), layer.kw(), col.data());
    T* out = y.data() + y.index(n, 0, 0, 0);
    gemm<T>(false, false, p, c_out, k, T(1), col.data(), k, layer.weights.data(), c_out, T(0),
            out, c_out);
    const T* b = layer.bias.data();
    for (std::int64_t r = 0; r < p; ++r)
      for (std::int64_t o = 0; o < c_out; ++o) out[r * c_out + o] += b[o];
  });
  return y;
}

template <typename T>
struct ConvGrads {
  Tensor4<T> dx, dweights, dbias;
};

/// Gradients of the convolution. Samples are accumulated sequentially so the
/// result does not depend on the worker count. `need_dx` skips the input
/// gradient for the first layer of a stack.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& x, const ConvLayer<T>& layer,
                             const Tensor4<T>& dy, bool need_dx = true) {
  const Shape4 s = x.shape();
  const std::int64_t k = layer.kh() * layer.kw() * s.c;
  const std::int64_t p = s.h * s.w;
  const std::int64_t c_out = layer.c_out();
  if (!(dy.shape() == Shape4{s.n, s.h, s.w, c_out}))
    throw ShapeError("conv2d_backward: upstream gradient shape mismatch");

  ConvGrads<T> g{need_dx ? Tensor4<T>(s) : Tensor4<T>(), Tensor4<T>(layer.weights.shape()),
                 Tensor4<T>(layer.bias.shape())};
  std::vector<T> col(static_cast<std::size_t>(p * k));
  std::vector<T> dcol(need_dx ? static_cast<std::size_t>(p * k) : 0);

  for (std::int64_t n = 0; n < s.n; ++n) {
    detail::im2col(x, n, layer.kh(), layer.kw(), col.data());
    const T* dy_n = dy.data() + dy.index(n, 0, 0, 0);
    // dW += col^T . dy
    gemm<T>(true, false, k, c_out, p, T(1), col.data(), k, dy_n, c_out, T(1),
            g.dweights.data(), c_out);
    T* db = g.dbias.data();
    for (std::int64_t r = 0; r < p; ++r)
      for (std::int64_t o = 0; o < c_out; ++o) db[o] += dy_n[r * c_out + o];
    if (need_dx) {
      gemm<T>(false, true, p, k, c_out, T(1), dy_n, c_out, layer.weights.data(), c_out, T(0),
              dcol.data(), k);
      detail::col2im_add(dcol.data(), layer.kh(), layer.kw(), g.dx, n);
    }
  }
  return g;
}

template <typename T>
Tensor4<T> leaky_relu(const Tensor4<T>& x, T leak) {
  if (leak < T(0) || leak > T(1)) throw DomainError("leak must lie in [0, 1]");
  Tensor4<T> y(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const T v = x.data()[i];
    y.data()[i] = v >= T(0) ? v : leak * v;
  }
  return y;
}

/// dL/dx given the pre-activation input.
template <typename T>
Tensor4<T> leaky_relu_backward(const Tensor4<T>& pre, const Tensor4<T>& dy, T leak) {
  detail::require_same_shape(pre, dy, "leaky_relu_backward");
  Tensor4<T> dx(pre.shape());
  for (std::int64_t i = 0; i < pre.size(); ++i)
    dx.data()[i] = pre.data()[i] >= T(0) ? dy.data()[i] : leak * dy.data()[i];
  return dx;
}

template <typename T>
struct PoolResult {
  Tensor4<T> y;
  std::vector<std::int64_t> argmax;  // flat index into the input tensor
};

template <typename T>
PoolResult<T> maxpool_forward(const Tensor4<T>& x, const PoolSpec& p) {
  const Shape4 s = x.shape();
  if ((s.h - p.ph) % p.sh != 0 || (s.w - p.pw) % p.sw != 0)
    throw ShapeError("maxpool: input " + s.str() + " is not divisible by the pooling grid");
  const std::int64_t oh = (s.h - p.ph) / p.sh + 1;
  const std::int64_t ow = (s.w - p.pw) / p.sw + 1;
  PoolResult<T> out{Tensor4<T>({s.n, oh, ow, s.c}),
                    std::vector<std::int64_t>(static_cast<std::size_t>(s.n * oh * ow * s.c))};

  global_pool().parallel_for(s.n, [&](std::int64_t n) {
    for (std::int64_t i = 0; i < oh; ++i)
      for (std::int64_t j = 0; j < ow; ++j)
        for (std::int64_t c = 0; c < s.c; ++c) {
          T best{};
          std::int64_t best_idx = -1;
          for (std::int64_t di = 0; di < p.ph; ++di)
            for (std::int64_t dj = 0; dj < p.pw; ++dj) {
              const std::int64_t idx = x.index(n, i * p.sh + di, j * p.sw + dj, c);
              const T v = x.data()[idx];
              if (best_idx < 0 || v > best) {  // ties keep the lowest flat index
                best = v;
                best_idx = idx;
              }
            }
          out.y(n, i, j, c) = best;
          out.argmax[static_cast<std::size_t>(out.y.index(n, i, j, c))] = best_idx;
        }
  });
  return out;
}

template <typename T>
Tensor4<T> maxpool_backward(const Shape4& input_shape, const PoolResult<T>& pooled,
                            const Tensor4<T>& dy) {
  detail::require_same_shape(pooled.y, dy, "maxpool_backward");
  Tensor4<T> dx(input_shape);
  for (std::int64_t i = 0; i < dy.size(); ++i)
    dx.data()[pooled.argmax[static_cast<std::size_t>(i)]] += dy.data()[i];
  return dx;
}

/// Flattens each subband output per sample (row-major h, w, c) and joins
/// them in subband order into a (n, 1, 1, total) feature tensor.
template <typename T>
Tensor4<T> concat_features(const std::vector<Tensor4<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_features: no inputs");
  const std::int64_t n = parts.front().shape().n;
  std::int64_t total = 0;
  for (const auto& t : parts) {
    if (t.shape().n != n) throw ShapeError("concat_features: batch size mismatch");
    total += t.size() / n;
  }
  Tensor4<T> out({n, 1, 1, total});
  for (std::int64_t s = 0; s < n; ++s) {
    T* dst = out.data() + out.index(s, 0, 0, 0);
    for (const auto& t : parts) {
      const std::int64_t len = t.size() / n;
      std::memcpy(dst, t.data() + t.index(s, 0, 0, 0), static_cast<std::size_t>(len) * sizeof(T));
      dst += len;
    }
  }
  return out;
}

/// Splits the concat gradient back into per-subband gradients.
template <typename T>
std::vector<Tensor4<T>> concat_backward(const std::vector<Shape4>& part_shapes,
                                        const Tensor4<T>& dy) {
  std::vector<Tensor4<T>> parts;
  parts.reserve(part_shapes.size());
  const std::int64_t n = dy.shape().n;
  std::int64_t offset = 0;
  for (const Shape4& s : part_shapes) {
    Tensor4<T> part(s);
    const std::int64_t len = s.count() / s.n;
    for (std::int64_t b = 0; b < n; ++b)
      std::memcpy(part.data() + part.index(b, 0, 0, 0),
                  dy.data() + dy.index(b, 0, 0, offset), static_cast<std::size_t>(len) * sizeof(T));
    offset += len;
    parts.push_back(std::move(part));
  }
  return parts;
}

/// x (n,1,1,d_in) -> x.W + b, no activation; the caller decides whether the
/// layer output feeds a nonlinearity or the softmax.
template <typename T>
Tensor4<T> fc_forward(const Tensor4<T>& x, const FCLayer<T>& layer) {
  const Shape4 s = x.shape();
  if (s.h != 1 || s.w != 1 || s.c != layer.d_in())
    throw ShapeError("fc_forward: input length " + std::to_string(s.c) + " != d_in " +
                     std::to_string(layer.d_in()));
  Tensor4<T> y({s.n, 1, 1, layer.d_out()});
  gemm<T>(false, false, s.n, layer.d_out(), layer.d_in(), T(1), x.data(), layer.d_in(),
          layer.weights.data(), layer.d_out(), T(0), y.data(), layer.d_out());
  const T* b = layer.bias.data();
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t o = 0; o < layer.d_out(); ++o) y.data()[n * layer.d_out() + o] += b[o];
  return y;
}

template <typename T>
struct FCGrads {
  Tensor4<T> dx, dweights, dbias;
};

template <typename T>
FCGrads<T> fc_backward(const Tensor4<T>& x, const FCLayer<T>& layer, const Tensor4<T>& dy) {
  const std::int64_t n = x.shape().n, din = layer.d_in(), dout = layer.d_out();
  FCGrads<T> g{Tensor4<T>(x.shape()), Tensor4<T>(layer.weights.shape()),
               Tensor4<T>(layer.bias.shape())};
  gemm<T>(true, false, din, dout, n, T(1), x.data(), din, dy.data(), dout, T(0),
          g.dweights.data(), dout);
  for (std::int64_t s = 0; s < n; ++s)
    for (std::int64_t o = 0; o < dout; ++o) g.dbias.data()[o] += dy.data()[s * dout + o];
  gemm<T>(false, true, n, din, dout, T(1), dy.data(), dout, layer.weights.data(), dout, T(0),
          g.dx.data(), din);
  return g;
}

enum class Mode { Train, Eval };

/// Inverted dropout: in train mode each element is zeroed with probability
/// `rate` and survivors scale by 1/(1-rate); eval mode is the identity. The
/// mask depends only on (rng key, nonce, element index).
template <typename T>
Tensor4<T> dropout_forward(const Tensor4<T>& x, double rate, const CounterRng& rng,
                           std::uint64_t nonce, Mode mode, std::vector<std::uint8_t>* mask_out) {
  if (rate < 0.0 || rate >= 1.0) throw DomainError("dropout rate must lie in [0, 1)");
  if (mode == Mode::Eval || rate == 0.0) {
    if (mask_out) mask_out->assign(static_cast<std::size_t>(x.size()), 1);
    return x;
  }
  const T inv_keep = static_cast<T>(1.0 / (1.0 - rate));
  Tensor4<T> y(x.shape());
  if (mask_out) mask_out->assign(static_cast<std::size_t>(x.size()), 0);
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const double u =
        static_cast<double>(rng.at(nonce + static_cast<std::uint64_t>(i)) >> 11) * 0x1.0p-53;
    if (u >= rate) {
      y.data()[i] = x.data()[i] * inv_keep;
      if (mask_out) (*mask_out)[static_cast<std::size_t>(i)] = 1;
    }
  }
  return y;
}

template <typename T>
Tensor4<T> dropout_backward(const Tensor4<T>& dy, double rate,
                            const std::vector<std::uint8_t>& mask) {
  if (rate == 0.0) return dy;
  const T inv_keep = static_cast<T>(1.0 / (1.0 - rate));
  Tensor4<T> dx(dy.shape());
  for (std::int64_t i = 0; i < dy.size(); ++i)
    dx.data()[i] = mask[static_cast<std::size_t>(i)] ? dy.data()[i] * inv_keep : T(0);
  return dx;
}

template <typename T>
struct SoftmaxResult {
  double loss = 0.0;       // mean cross-entropy over the batch
  Tensor4<T> probs;        // (n, 1, 1, classes)
};

template <typename T>
SoftmaxResult<T> softmax_xent(const Tensor4<T>& logits, const std::vector<int>& labels) {
  const Shape4 s = logits.shape();
  if (s.h != 1 || s.w != 1) throw ShapeError("softmax_xent expects (n,1,1,c) logits");
  if (static_cast<std::int64_t>(labels.size()) != s.n)
    throw ShapeError("softmax_xent: batch/label count mismatch");
  SoftmaxResult<T> out{0.0, Tensor4<T>(s)};
  for (std::int64_t n = 0; n < s.n; ++n) {
    const int label = labels[static_cast<std::size_t>(n)];
    if (label < 0 || label >= s.c)
      throw IndexError("label " + std::to_string(label) + " out of range for " +
                       std::to_string(s.c) + " classes");
    const T* row = logits.data() + n * s.c;
    T* prow = out.probs.data() + n * s.c;
    T max_logit = row[0];
    for (std::int64_t c = 1; c < s.c; ++c) max_logit = std::max(max_logit, row[c]);
    double denom = 0.0;
    for (std::int64_t c = 0; c < s.c; ++c) {
      const double e = std::exp(static_cast<double>(row[c] - max_logit));
      prow[c] = static_cast<T>(e);
      denom += e;
    }
    for (std::int64_t c = 0; c < s.c; ++c) prow[c] = static_cast<T>(prow[c] / denom);
    out.loss += -std::log(std::max(static_cast<double>(prow[label]), 1e-300));
  }
  out.loss /= static_cast<double>(s.n);
  return out;
}

/// d(mean loss)/d(logits) = (probs - onehot) / n.
template <typename T>
Tensor4<T> softmax_xent_backward(const SoftmaxResult<T>& fwd, const std::vector<int>& labels) {
  const Shape4 s = fwd.probs.shape();
  Tensor4<T> d(s);
  const T inv_n = T(1) / static_cast<T>(s.n);
  for (std::int64_t n = 0; n < s.n; ++n) {
    const T* prow = fwd.probs.data() + n * s.c;
    T* drow = d.data() + n * s.c;
    for (std::int64_t c = 0; c < s.c; ++c) drow[c] = prow[c] * inv_n;
    drow[labels[static_cast<std::size_t>(n)]] -= inv_n;
  }
  return d;
}

}  // namespace subband
