// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "subband/error.hpp"
#include "subband/rng.hpp"
#include "subband/tensor.hpp"

namespace subband {

/// Constant learning rate with optional step decay: the base rate times the
/// factor of every configured step whose epoch has been reached.
struct LrSchedule {
  double base = 0.01;
  std::vector<std::pair<int, double>> steps;  // (epoch, factor)

  double at(int epoch) const {
    double lr = base;
    for (const auto& [e, factor] : steps)
      if (epoch >= e) lr *= factor;
    return lr;
  }
};

/// SGD with momentum and coupled weight decay, elementwise and in this
/// order:
///   v <- momentum * v - decay * lr * w - lr * g
///   w <- w + v
/// Gradients are expected to be mini-batch averages.
template <typename T>
class SgdOptimizer {
 public:
  SgdOptimizer(double momentum, double decay) : momentum_(momentum), decay_(decay) {}

  static SgdOptimizer defaults() { return SgdOptimizer(0.9, 0.0005); }

  void attach(const std::vector<Tensor4<T>*>& params) {
    velocity_.clear();
    velocity_.reserve(params.size());
    for (const auto* p : params) velocity_.emplace_back(p->shape());  // zero-initialized
  }

  void step(const std::vector<Tensor4<T>*>& params, const std::vector<Tensor4<T>>& grads,
            double lr) {
    if (lr <= 0) throw ConfigError("learning rate must be positive");
    if (params.size() != velocity_.size() || grads.size() != params.size())
      throw ShapeError("optimizer: parameter/gradient/velocity count mismatch");
    const T m = static_cast<T>(momentum_);
    const T dl = static_cast<T>(decay_ * lr);
    const T l = static_cast<T>(lr);
    for (std::size_t t = 0; t < params.size(); ++t) {
      Tensor4<T>& w = *params[t];
      const Tensor4<T>& g = grads[t];
      Tensor4<T>& v = velocity_[t];
      if (!(g.shape() == w.shape()) || !(v.shape() == w.shape()))
        throw ShapeError("optimizer: shape mismatch on parameter " + std::to_string(t));
      for (std::int64_t i = 0; i < w.size(); ++i) {
        v.data()[i] = m * v.data()[i] - dl * w.data()[i] - l * g.data()[i];
        w.data()[i] += v.data()[i];
      }
    }
    ++iteration_;
  }

  double momentum() const { return momentum_; }
  double decay() const { return decay_; }
  std::int64_t iteration() const { return iteration_; }
  void set_iteration(std::int64_t i) { iteration_ = i; }

  std::vector<Tensor4<T>>& velocity() { return velocity_; }
  const std::vector<Tensor4<T>>& velocity() const { return velocity_; }

 private:
  double momentum_;
  double decay_;
  std::int64_t iteration_ = 0;
  std::vector<Tensor4<T>> velocity_;
};

/// Weight and bias initialization: weights drawn from N(0, 0.01^2) on a
/// counter-based stream per tensor, biases set to 1. Reproducible for a
/// given seed regardless of threading.
template <typename T>
void init_params(const std::vector<Tensor4<T>*>& weights, const std::vector<Tensor4<T>*>& biases,
                 std::uint64_t seed, double weight_std = 0.01) {
  std::uint64_t stream = 0;
  for (auto* w : weights) {
    CounterRng rng = CounterRng::stream(seed, stream++);
    for (std::int64_t i = 0; i < w->size(); ++i)
      w->data()[i] = static_cast<T>(weight_std * rng.next_normal());
  }
  for (auto* b : biases)
    for (std::int64_t i = 0; i < b->size(); ++i) b->data()[i] = T(1);
}

}  // namespace subband
