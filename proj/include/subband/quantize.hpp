// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cfenv>
#include <cmath>
#include <cstdint>
#include <string>

#include "subband/error.hpp"
#include "subband/model.hpp"
#include "subband/tensor.hpp"

namespace subband {

/// Weight-and-bias target formats. Float8 is a 1-4-3 minifloat (bias 7,
/// top exponent reserved, so max finite = 240) with round-to-nearest-even
/// and saturation to +-240 instead of infinities. Float16 is standard half
/// precision. Float32 is the identity on f32 weights.
enum class WeightFormat { Float8, Float16, Float32 };

inline WeightFormat weight_format_from(const std::string& s) {
  if (s == "f8" || s == "float8" || s == "8") return WeightFormat::Float8;
  if (s == "f16" || s == "float16" || s == "16") return WeightFormat::Float16;
  if (s == "f32" || s == "float32" || s == "32") return WeightFormat::Float32;
  throw ConfigError("unknown weight format '" + s + "' (expected f8, f16 or f32)");
}

inline std::string weight_format_name(WeightFormat f) {
  switch (f) {
    case WeightFormat::Float8: return "f8";
    case WeightFormat::Float16: return "f16";
    case WeightFormat::Float32: return "f32";
  }
  return "?";
}

namespace detail {

/// Rounds to the nearest representable value of a binary minifloat with
/// `exp_bits` exponent bits, `man_bits` mantissa bits and the standard bias
/// 2^(exp_bits-1) - 1. The top exponent code is reserved, like IEEE
/// formats; overflow either saturates to the largest finite value or
/// produces infinity. Ties round to even (nearbyint under the default
/// rounding mode).
inline double quantize_minifloat(double x, int exp_bits, int man_bits, bool saturate) {
  if (std::isnan(x)) return x;
  if (x == 0.0) return x;
  const int bias = (1 << (exp_bits - 1)) - 1;
  const int e_max = (1 << exp_bits) - 2 - bias;  // largest normal exponent
  const int e_min = 1 - bias;                    // smallest normal exponent
  const double man_scale = static_cast<double>(std::int64_t(1) << man_bits);
  const double max_finite = std::ldexp(2.0 - 1.0 / man_scale, e_max);

  const double a = std::abs(x);
  const double sign = x < 0 ? -1.0 : 1.0;
  if (std::isinf(a)) return saturate ? sign * max_finite : x;

  int e = 0;
  std::frexp(a, &e);  // a = f * 2^e with f in [0.5, 1)
  e -= 1;             // a = m * 2^e with m in [1, 2)
  if (e < e_min) e = e_min;  // subnormal range quantizes on the fixed grid

  const double step = std::ldexp(1.0, e - man_bits);
  const double units = std::nearbyint(a / step);
  double q = units * step;
  if (q > max_finite) {
    // Mantissa overflow may push past the largest finite value.
    if (std::ldexp(1.0, e + 1) <= max_finite)
      q = std::ldexp(1.0, e + 1);
    else
      q = saturate ? max_finite : std::numeric_limits<double>::infinity();
  }
  return sign * q;
}

}  // namespace detail

inline double quantize_weight(double x, WeightFormat f) {
  switch (f) {
    case WeightFormat::Float8: return detail::quantize_minifloat(x, 4, 3, true);
    case WeightFormat::Float16: return detail::quantize_minifloat(x, 5, 10, false);
    case WeightFormat::Float32: return static_cast<double>(static_cast<float>(x));
  }
  return x;
}

/// Uniform input quantization to b bits: round(x * (2^b - 1)) / (2^b - 1)
/// with halves rounding away from zero. Inputs must lie in [0, 1] (raw
/// pixel domain, before any normalization).
template <typename T>
Tensor4<T> quantize_input(const Tensor4<T>& x, int bits) {
  if (bits < 1) throw DomainError("input quantization needs at least one bit");
  const double levels = std::ldexp(1.0, bits) - 1.0;
  Tensor4<T> y(x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const double v = static_cast<double>(x.data()[i]);
    if (v < 0.0 || v > 1.0)
      throw DomainError("quantize_input: value " + std::to_string(v) + " outside [0, 1]");
    y.data()[i] = static_cast<T>(std::round(v * levels) / levels);
  }
  return y;
}

/// Copy of the model with every weight and bias mapped to its nearest
/// representable value in the target format; compute stays in working
/// precision (simulated quantization, no retraining).
template <typename T>
Model<T> quantize_params(const Model<T>& model, WeightFormat format) {
  Model<T> copy = model;
  if (format == WeightFormat::Float32 && precision_of<T>() == Precision::F32) return copy;
  for (auto& p : copy.params())
    for (std::int64_t i = 0; i < p.tensor->size(); ++i)
      p.tensor->data()[i] =
          static_cast<T>(quantize_weight(static_cast<double>(p.tensor->data()[i]), format));
  return copy;
}

}  // namespace subband
