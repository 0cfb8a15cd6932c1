// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "subband/config.hpp"
#include "subband/error.hpp"
#include "subband/layers.hpp"
#include "subband/optimizer.hpp"
#include "subband/rng.hpp"
#include "subband/tensor.hpp"
#include "subband/wavelet.hpp"

namespace subband {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor4<T>* tensor;
};

/// Activation record of one training-mode forward pass; backward consumes it
/// in reverse. Holding the record outside the model keeps forward re-entrant
/// for read-only (eval) use.
template <typename T>
struct Tape {
  bool recorded = false;

  struct ConvRec {
    Tensor4<T> input;
    Tensor4<T> pre_act;
  };
  struct PoolRec {
    Shape4 in_shape;
    PoolResult<T> pooled;
  };
  struct StackRec {
    std::vector<ConvRec> convs;
    std::vector<PoolRec> pools;
    Tensor4<T> output;  // pre-concat activation
  };
  std::vector<StackRec> stacks;
  std::vector<Shape4> concat_parts;

  struct FcRec {
    Tensor4<T> input;
    Tensor4<T> pre_act;
    std::vector<std::uint8_t> dropout_mask;
  };
  std::vector<FcRec> fc;
  Tensor4<T> logits;
};

/// Instantiated network: one weight stack per subband for SRCNN, a single
/// stack for BCNN (full band) and TCNN (subbands stacked as channels).
/// The wavelet front end is a fixed transform and receives no gradient.
template <typename T>
class Model {
 public:
  Model() : filters_(WaveletFilterPair::d2()) {}

  static Model build(const ArchitectureConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    Model m;
    m.cfg_ = cfg;
    const std::int64_t stacks = cfg.stack_count();
    m.stacks_.resize(static_cast<std::size_t>(stacks));
    for (auto& stack : m.stacks_) {
      for (const LayerDesc& d : cfg.subband_stack)
        if (d.kind == LayerDesc::Kind::Conv)
          stack.emplace_back(d.kh, d.kw, d.c_in, d.c_out, static_cast<T>(cfg.leak));
    }
    for (const FcDesc& f : cfg.fc_stack) m.fc_.emplace_back(f.d_in, f.d_out, static_cast<T>(cfg.leak));

    std::vector<Tensor4<T>*> weights, biases;
    for (auto& stack : m.stacks_)
      for (auto& conv : stack) {
        weights.push_back(&conv.weights);
        biases.push_back(&conv.bias);
      }
    for (auto& fc : m.fc_) {
      weights.push_back(&fc.weights);
      biases.push_back(&fc.bias);
    }
    init_params(weights, biases, seed);
    m.reset_dropout(seed);
    return m;
  }

  const ArchitectureConfig& config() const { return cfg_; }
  const WaveletFilterPair& filters() const { return filters_; }

  /// Named parameter tensors in a fixed order (stacks first, then FC).
  std::vector<NamedParam<T>> params() {
    std::vector<NamedParam<T>> out;
    for (std::size_t s = 0; s < stacks_.size(); ++s)
      for (std::size_t i = 0; i < stacks_[s].size(); ++i) {
        const std::string base = "stack" + std::to_string(s) + ".conv" + std::to_string(i);
        out.push_back({base + ".weight", &stacks_[s][i].weights});
        out.push_back({base + ".bias", &stacks_[s][i].bias});
      }
    for (std::size_t i = 0; i < fc_.size(); ++i) {
      const std::string base = "fc" + std::to_string(i);
      out.push_back({base + ".weight", &fc_[i].weights});
      out.push_back({base + ".bias", &fc_[i].bias});
    }
    return out;
  }

  std::vector<Tensor4<T>*> param_tensors() {
    std::vector<Tensor4<T>*> out;
    for (auto& p : params()) out.push_back(p.tensor);
    return out;
  }

  std::vector<ConvLayer<T>>& stack(std::size_t s) { return stacks_[s]; }
  std::vector<FCLayer<T>>& fc_layers() { return fc_; }

  /// Deterministic dropout stream; reset before training for reproducible
  /// masks, independent of how many eval passes run in between.
  void reset_dropout(std::uint64_t seed) {
    dropout_rng_ = CounterRng::stream(seed, 0x0d0dull);
    dropout_nonce_ = 0;
  }
  std::uint64_t dropout_nonce() const { return dropout_nonce_; }
  void set_dropout_state(std::uint64_t key, std::uint64_t nonce) {
    dropout_rng_ = CounterRng(key);
    dropout_nonce_ = nonce;
  }
  std::pair<std::uint64_t, std::uint64_t> dropout_state() const {
    return {dropout_rng_.key(), dropout_nonce_};
  }

  /// Splits the input into the per-stack tensors each family consumes.
  std::vector<Tensor4<T>> stack_inputs(const Tensor4<T>& x) const {
    const Shape4 s = x.shape();
    if (s.h != cfg_.in_h || s.w != cfg_.in_w || s.c != cfg_.in_c)
      throw ShapeError("batch shape " + s.str() + " does not match the configured input " +
                       std::to_string(cfg_.in_h) + "x" + std::to_string(cfg_.in_w) + "x" +
                       std::to_string(cfg_.in_c));
    if (cfg_.family == Family::BCNN) return {x};
    SubbandSet<T> set = packet_decompose(x, cfg_.dwt_levels, filters_);
    if (cfg_.family == Family::SRCNN) return std::move(set.subbands);

    // TCNN: subbands stacked along channels, subband-major order.
    const Shape4 hs = set.subbands.front().shape();
    const std::int64_t k = set.count();
    Tensor4<T> merged({s.n, hs.h, hs.w, k * hs.c});
    for (std::int64_t b = 0; b < k; ++b) {
      const Tensor4<T>& sb = set.subbands[static_cast<std::size_t>(b)];
      for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t i = 0; i < hs.h; ++i)
          for (std::int64_t j = 0; j < hs.w; ++j)
            std::memcpy(merged.data() + merged.index(n, i, j, b * hs.c),
                        sb.data() + sb.index(n, i, j, 0),
                        static_cast<std::size_t>(hs.c) * sizeof(T));
    }
    return {std::move(merged)};
  }

  Tensor4<T> forward(const Tensor4<T>& x, Mode mode, Tape<T>* tape = nullptr) {
    std::vector<Tensor4<T>> inputs = stack_inputs(x);
    if (tape) {
      *tape = Tape<T>{};
      tape->stacks.resize(stacks_.size());
    }

    std::vector<Tensor4<T>> stack_outs;
    stack_outs.reserve(stacks_.size());
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
      Tensor4<T> v = std::move(inputs[s]);
      std::size_t conv_idx = 0;
      for (const LayerDesc& d : cfg_.subband_stack) {
        if (d.kind == LayerDesc::Kind::Conv) {
          const ConvLayer<T>& conv = stacks_[s][conv_idx++];
          Tensor4<T> pre = conv2d_forward(v, conv);
          Tensor4<T> post = leaky_relu(pre, conv.leak);
          if (tape) tape->stacks[s].convs.push_back({std::move(v), std::move(pre)});
          v = std::move(post);
        } else {
          PoolResult<T> pr = maxpool_forward(v, d.pool);
          Tensor4<T> y = pr.y;
          if (tape) tape->stacks[s].pools.push_back({v.shape(), std::move(pr)});
          v = std::move(y);
        }
      }
      if (tape) tape->stacks[s].output = v;
      stack_outs.push_back(std::move(v));
    }

    std::vector<Shape4> part_shapes;
    for (const auto& t : stack_outs) part_shapes.push_back(t.shape());
    Tensor4<T> v = concat_features(stack_outs);
    if (tape) tape->concat_parts = part_shapes;

    for (std::size_t i = 0; i < fc_.size(); ++i) {
      const bool last = (i + 1 == fc_.size());
      Tensor4<T> pre = fc_forward(v, fc_[i]);
      typename Tape<T>::FcRec rec;
      if (tape) rec.input = std::move(v);
      Tensor4<T> out = last ? pre : leaky_relu(pre, fc_[i].leak);
      if (tape) rec.pre_act = std::move(pre);
      const double rate = cfg_.fc_stack[i].dropout;
      if (rate > 0.0) {
        std::vector<std::uint8_t> mask;
        out = dropout_forward(out, rate, dropout_rng_, dropout_nonce_, mode,
                              tape ? &mask : nullptr);
        if (mode == Mode::Train) dropout_nonce_ += static_cast<std::uint64_t>(out.size());
        if (tape) rec.dropout_mask = std::move(mask);
      }
      if (tape) tape->fc.push_back(std::move(rec));
      v = std::move(out);
    }
    if (tape) {
      tape->logits = v;
      tape->recorded = true;
    }
    return v;
  }

  /// Gradients for every parameter, aligned with params(). The input
  /// gradient is not propagated through the wavelet front end.
  std::vector<Tensor4<T>> backward(const Tape<T>& tape, const Tensor4<T>& dlogits) {
    if (!tape.recorded) throw StateError("backward called before a recorded forward");

    std::vector<Tensor4<T>> grads(param_count());
    std::size_t grad_base_fc = param_count() - 2 * fc_.size();

    Tensor4<T> d = dlogits;
    for (std::size_t ii = fc_.size(); ii-- > 0;) {
      const bool last = (ii + 1 == fc_.size());
      const auto& rec = tape.fc[ii];
      const double rate = cfg_.fc_stack[ii].dropout;
      if (rate > 0.0) d = dropout_backward(d, rate, rec.dropout_mask);
      if (!last) d = leaky_relu_backward(rec.pre_act, d, fc_[ii].leak);
      FCGrads<T> g = fc_backward(rec.input, fc_[ii], d);
      grads[grad_base_fc + 2 * ii] = std::move(g.dweights);
      grads[grad_base_fc + 2 * ii + 1] = std::move(g.dbias);
      d = std::move(g.dx);
    }

    std::vector<Tensor4<T>> parts = concat_backward(tape.concat_parts, d);
    std::size_t grad_idx = 0;
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
      Tensor4<T> ds = std::move(parts[s]);
      std::size_t conv_idx = stacks_[s].size();
      std::size_t pool_idx = tape.stacks[s].pools.size();
      const std::size_t base = grad_idx;
      for (std::size_t oi = cfg_.subband_stack.size(); oi-- > 0;) {
        const LayerDesc& desc = cfg_.subband_stack[oi];
        if (desc.kind == LayerDesc::Kind::Pool) {
          const auto& rec = tape.stacks[s].pools[--pool_idx];
          ds = maxpool_backward(rec.in_shape, rec.pooled, ds);
        } else {
          --conv_idx;
          const auto& rec = tape.stacks[s].convs[conv_idx];
          const ConvLayer<T>& conv = stacks_[s][conv_idx];
          Tensor4<T> dpre = leaky_relu_backward(rec.pre_act, ds, conv.leak);
          const bool need_dx = oi > 0;
          ConvGrads<T> g = conv2d_backward(rec.input, conv, dpre, need_dx);
          grads[base + 2 * conv_idx] = std::move(g.dweights);
          grads[base + 2 * conv_idx + 1] = std::move(g.dbias);
          ds = std::move(g.dx);
        }
      }
      grad_idx += 2 * stacks_[s].size();
    }
    return grads;
  }

  std::size_t param_count() const {
    std::size_t n = 2 * fc_.size();
    for (const auto& s : stacks_) n += 2 * s.size();
    return n;
  }

  /// Name of the first layer whose recorded activation contains a
  /// non-finite value, for divergence diagnostics.
  static std::string first_nonfinite(const Tape<T>& tape) {
    for (std::size_t s = 0; s < tape.stacks.size(); ++s)
      for (std::size_t i = 0; i < tape.stacks[s].convs.size(); ++i)
        if (!all_finite(tape.stacks[s].convs[i].pre_act))
          return "stack" + std::to_string(s) + ".conv" + std::to_string(i);
    for (std::size_t i = 0; i < tape.fc.size(); ++i)
      if (!all_finite(tape.fc[i].pre_act)) return "fc" + std::to_string(i);
    return "loss";
  }

 private:
  ArchitectureConfig cfg_;
  WaveletFilterPair filters_;
  std::vector<std::vector<ConvLayer<T>>> stacks_;
  std::vector<FCLayer<T>> fc_;
  CounterRng dropout_rng_{0};
  std::uint64_t dropout_nonce_ = 0;
};

/// Top-1 accuracy; `top5` (optional) receives the top-5 hit count.
template <typename T>
std::int64_t count_top1(const Tensor4<T>& logits, const std::vector<int>& labels,
                        std::int64_t* top5 = nullptr) {
  const Shape4 s = logits.shape();
  std::int64_t hits = 0;
  for (std::int64_t n = 0; n < s.n; ++n) {
    const T* row = logits.data() + n * s.c;
    const int label = labels[static_cast<std::size_t>(n)];
    std::int64_t best = 0;
    for (std::int64_t c = 1; c < s.c; ++c)
      if (row[c] > row[best]) best = c;
    if (best == label) ++hits;
    if (top5) {
      // rank of the true class: count of strictly larger logits
      std::int64_t larger = 0;
      for (std::int64_t c = 0; c < s.c; ++c)
        if (row[c] > row[label] || (row[c] == row[label] && c < label)) ++larger;
      if (larger < 5) ++(*top5);
    }
  }
  return hits;
}

}  // namespace subband
