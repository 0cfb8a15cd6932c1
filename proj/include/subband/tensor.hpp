// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "subband/error.hpp"

namespace subband {

/// Element precision of a tensor. F64 exists so gradient checks can run the
/// whole graph in double; training defaults to F32.
enum class Precision : std::uint8_t { F32 = 1, F64 = 2 };

template <typename T>
constexpr Precision precision_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "tensors hold float or double");
  return std::is_same_v<T, float> ? Precision::F32 : Precision::F64;
}

/// (batch, height, width, channel) extents of a rank-4 tensor.
struct Shape4 {
  std::int64_t n = 0, h = 0, w = 0, c = 0;

  std::int64_t count() const { return n * h * w * c; }
  bool operator==(const Shape4&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(h) + "," +
           std::to_string(w) + "," + std::to_string(c) + ")";
  }
};

/// Dense rank-4 array, row-major in (n, h, w, c) order so the channel axis is
/// contiguous. Values are immutable once an operation has produced the
/// tensor; mutation is confined to construction and optimizer buffers.
template <typename T>
class Tensor4 {
 public:
  using value_type = T;

  Tensor4() = default;

  explicit Tensor4(Shape4 s) : shape_(checked(s)), data_(s.count(), T(0)) {}

  Tensor4(Shape4 s, std::vector<T> values) : shape_(checked(s)), data_(std::move(values)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_.count())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
  }

  static Tensor4 zeros(Shape4 s) { return Tensor4(s); }

  static Tensor4 full(Shape4 s, T value) {
    Tensor4 t(s);
    for (auto& v : t.data_) v = value;
    return t;
  }

  const Shape4& shape() const { return shape_; }
  std::int64_t size() const { return shape_.count(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator()(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) {
    return data_[index(n, h, w, c)];
  }
  const T& operator()(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) const {
    return data_[index(n, h, w, c)];
  }

  std::int64_t index(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c) const {
    return ((n * shape_.h + h) * shape_.w + w) * shape_.c + c;
  }

  template <typename U>
  Tensor4<U> cast() const {
    Tensor4<U> out(shape_);
    for (std::int64_t i = 0; i < size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  static Shape4 checked(const Shape4& s) {
    if (s.n < 1 || s.h < 1 || s.w < 1 || s.c < 1)
      throw ShapeError("all tensor dimensions must be >= 1, got " + s.str());
    return s;
  }

  Shape4 shape_{};
  std::vector<T> data_;
};

namespace detail {
template <typename T>
void require_same_shape(const Tensor4<T>& a, const Tensor4<T>& b, const char* op) {
  if (!(a.shape() == b.shape()))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() +
                     " vs " + b.shape().str());
}
}  // namespace detail

template <typename T>
Tensor4<T> add(const Tensor4<T>& a, const Tensor4<T>& b) {
  detail::require_same_shape(a, b, "add");
  Tensor4<T> out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

template <typename T>
Tensor4<T> sub(const Tensor4<T>& a, const Tensor4<T>& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor4<T> out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

template <typename T>
Tensor4<T> mul(const Tensor4<T>& a, const Tensor4<T>& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor4<T> out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

template <typename T>
Tensor4<T> scale(const Tensor4<T>& a, T s) {
  Tensor4<T> out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * s;
  return out;
}

/// Sum of squared elements, accumulated in double left to right.
template <typename T>
double sum_sq(const Tensor4<T>& a) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const double v = static_cast<double>(a.data()[i]);
    acc += v * v;
  }
  return acc;
}

template <typename T>
bool all_finite(const Tensor4<T>& a) {
  for (std::int64_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(static_cast<double>(a.data()[i]))) return false;
  return true;
}

template <typename T>
double max_abs_diff(const Tensor4<T>& a, const Tensor4<T>& b) {
  detail::require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
  return m;
}

}  // namespace subband
