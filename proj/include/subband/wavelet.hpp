// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "subband/error.hpp"
#include "subband/tensor.hpp"

namespace subband {

/// Orthonormal two-channel analysis filter pair. The constructor enforces
/// unit energy on both filters and the quadrature-mirror relation
/// high[i] = (-1)^i * low[len-1-i], which together guarantee perfect
/// reconstruction of the periodic transform below.
class WaveletFilterPair {
 public:
  WaveletFilterPair(std::vector<double> low, std::vector<double> high)
      : low_(std::move(low)), high_(std::move(high)) {
    if (low_.empty() || low_.size() != high_.size())
      throw ShapeError("filter pair needs equal, non-empty tap counts");
    validate();
  }

  /// Default 2-tap basis: low = [1/sqrt2, 1/sqrt2], high = [1/sqrt2, -1/sqrt2].
  static WaveletFilterPair d2() {
    const double s = 1.0 / std::sqrt(2.0);
    return WaveletFilterPair({s, s}, {s, -s});
  }

  const std::vector<double>& low() const { return low_; }
  const std::vector<double>& high() const { return high_; }
  std::size_t taps() const { return low_.size(); }

 private:
  void validate() const {
    double el = 0, eh = 0;
    for (double v : low_) el += v * v;
    for (double v : high_) eh += v * v;
    if (std::abs(el - 1.0) > 1e-9 || std::abs(eh - 1.0) > 1e-9)
      throw DomainError("filter pair is not orthonormal (energies " + std::to_string(el) +
                        ", " + std::to_string(eh) + ")");
    const std::size_t len = low_.size();
    for (std::size_t i = 0; i < len; ++i) {
      const double want = (i % 2 == 0 ? 1.0 : -1.0) * low_[len - 1 - i];
      if (std::abs(high_[i] - want) > 1e-12)
        throw DomainError("high filter violates the quadrature-mirror relation at tap " +
                          std::to_string(i));
    }
  }

  std::vector<double> low_, high_;
};

/// One level of 2D analysis: four half-size tensors. lh is high-pass along
/// width, hl along height.
template <typename T>
struct QuadSplit {
  Tensor4<T> ll, lh, hl, hh;
};

/// Uniform M-level packet decomposition: 4^M equally shaped subbands in
/// depth-first order with (LL, LH, HL, HH) children at every node.
template <typename T>
struct SubbandSet {
  int levels = 0;
  std::vector<Tensor4<T>> subbands;

  std::int64_t count() const { return static_cast<std::int64_t>(subbands.size()); }
};

namespace detail {

// Analysis keeps even-phase samples: out[j] = sum_i f[i] * x[(2j+i) mod len].
// With the 2-tap pair and even extents the modulo never wraps.
template <typename T>
inline void analyze_line(const T* x, std::int64_t len, std::int64_t stride,
                         const std::vector<double>& f, T* out, std::int64_t out_stride) {
  const std::int64_t taps = static_cast<std::int64_t>(f.size());
  const std::int64_t half = len / 2;
  for (std::int64_t j = 0; j < half; ++j) {
    double acc = 0;
    for (std::int64_t i = 0; i < taps; ++i) {
      const std::int64_t src = (2 * j + i) % len;
      acc += f[static_cast<std::size_t>(i)] * static_cast<double>(x[src * stride]);
    }
    out[j * out_stride] = static_cast<T>(acc);
  }
}

// Transposed analysis: x[(2j+i) mod len] += f[i] * coeff[j].
template <typename T>
inline void synthesize_line(const T* coeff, std::int64_t half, const std::vector<double>& f,
                            double* acc, std::int64_t len) {
  const std::int64_t taps = static_cast<std::int64_t>(f.size());
  for (std::int64_t j = 0; j < half; ++j) {
    const double v = static_cast<double>(coeff[j]);
    for (std::int64_t i = 0; i < taps; ++i) acc[(2 * j + i) % len] += f[static_cast<std::size_t>(i)] * v;
  }
}

}  // namespace detail

/// Single analysis level. Rows are filtered and decimated first, then
/// columns. Requires even height and width.
template <typename T>
QuadSplit<T> dwt2d_level(const Tensor4<T>& x, const WaveletFilterPair& filters) {
  const Shape4 s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0)
    throw ShapeError("dwt2d_level needs even height and width, got " + s.str());
  const Shape4 half{s.n, s.h / 2, s.w / 2, s.c};
  QuadSplit<T> out{Tensor4<T>(half), Tensor4<T>(half), Tensor4<T>(half), Tensor4<T>(half)};

  std::vector<T> row_lo(static_cast<std::size_t>(s.h * (s.w / 2)));
  std::vector<T> row_hi(row_lo.size());
  const std::int64_t wh = s.w / 2;

  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      const T* base = x.data() + x.index(n, 0, 0, c);
      for (std::int64_t i = 0; i < s.h; ++i) {
        const T* row = base + i * s.w * s.c;
        detail::analyze_line(row, s.w, s.c, filters.low(), row_lo.data() + i * wh, 1);
        detail::analyze_line(row, s.w, s.c, filters.high(), row_hi.data() + i * wh, 1);
      }
      for (std::int64_t j = 0; j < wh; ++j) {
        detail::analyze_line(row_lo.data() + j, s.h, wh, filters.low(),
                             out.ll.data() + out.ll.index(n, 0, j, c), wh * s.c);
        detail::analyze_line(row_lo.data() + j, s.h, wh, filters.high(),
                             out.hl.data() + out.hl.index(n, 0, j, c), wh * s.c);
        detail::analyze_line(row_hi.data() + j, s.h, wh, filters.low(),
                             out.lh.data() + out.lh.index(n, 0, j, c), wh * s.c);
        detail::analyze_line(row_hi.data() + j, s.h, wh, filters.high(),
                             out.hh.data() + out.hh.index(n, 0, j, c), wh * s.c);
      }
    }
  }
  return out;
}

/// Inverse of dwt2d_level.
template <typename T>
Tensor4<T> idwt2d_level(const QuadSplit<T>& q, const WaveletFilterPair& filters) {
  const Shape4 hs = q.ll.shape();
  for (const Tensor4<T>* t : {&q.lh, &q.hl, &q.hh})
    if (!(t->shape() == hs))
      throw ShapeError("idwt2d_level: inconsistent subband shapes " + hs.str() + " vs " +
                       t->shape().str());
  const Shape4 s{hs.n, hs.h * 2, hs.w * 2, hs.c};
  Tensor4<T> out(s);

  const std::int64_t wh = hs.w;
  std::vector<double> col_acc(static_cast<std::size_t>(s.h));
  std::vector<T> row_lo(static_cast<std::size_t>(s.h * wh));
  std::vector<T> row_hi(row_lo.size());
  std::vector<double> row_acc(static_cast<std::size_t>(s.w));
  std::vector<T> col_lo(static_cast<std::size_t>(hs.h));
  std::vector<T> col_hi(static_cast<std::size_t>(hs.h));

  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      // Column synthesis reconstructs the row-filtered intermediates.
      for (std::int64_t j = 0; j < wh; ++j) {
        for (std::int64_t i = 0; i < hs.h; ++i) {
          col_lo[i] = q.ll(n, i, j, c);
          col_hi[i] = q.hl(n, i, j, c);
        }
        std::fill(col_acc.begin(), col_acc.end(), 0.0);
        detail::synthesize_line(col_lo.data(), hs.h, filters.low(), col_acc.data(), s.h);
        detail::synthesize_line(col_hi.data(), hs.h, filters.high(), col_acc.data(), s.h);
        for (std::int64_t i = 0; i < s.h; ++i) row_lo[i * wh + j] = static_cast<T>(col_acc[i]);

        for (std::int64_t i = 0; i < hs.h; ++i) {
          col_lo[i] = q.lh(n, i, j, c);
          col_hi[i] = q.hh(n, i, j, c);
        }
        std::fill(col_acc.begin(), col_acc.end(), 0.0);
        detail::synthesize_line(col_lo.data(), hs.h, filters.low(), col_acc.data(), s.h);
        detail::synthesize_line(col_hi.data(), hs.h, filters.high(), col_acc.data(), s.h);
        for (std::int64_t i = 0; i < s.h; ++i) row_hi[i * wh + j] = static_cast<T>(col_acc[i]);
      }
      // Row synthesis.
      for (std::int64_t i = 0; i < s.h; ++i) {
        std::fill(row_acc.begin(), row_acc.end(), 0.0);
        detail::synthesize_line(row_lo.data() + i * wh, wh, filters.low(), row_acc.data(), s.w);
        detail::synthesize_line(row_hi.data() + i * wh, wh, filters.high(), row_acc.data(), s.w);
        for (std::int64_t j = 0; j < s.w; ++j) out(n, i, j, c) = static_cast<T>(row_acc[j]);
      }
    }
  }
  return out;
}

/// Complete M-level packet decomposition into 4^M critically sampled
/// subbands. m = 0 returns the input unchanged as a single subband.
template <typename T>
SubbandSet<T> packet_decompose(const Tensor4<T>& x, int m, const WaveletFilterPair& filters) {
  if (m < 0) throw DomainError("decomposition level must be >= 0");
  const Shape4 s = x.shape();
  const std::int64_t div = std::int64_t(1) << m;
  if (s.h % div != 0 || s.w % div != 0)
    throw ShapeError("input " + s.str() + " not divisible by 2^" + std::to_string(m));

  SubbandSet<T> out;
  out.levels = m;
  if (m == 0) {
    out.subbands.push_back(x);
    return out;
  }
  const QuadSplit<T> q = dwt2d_level(x, filters);
  for (const Tensor4<T>* child : {&q.ll, &q.lh, &q.hl, &q.hh}) {
    SubbandSet<T> sub = packet_decompose(*child, m - 1, filters);
    for (auto& t : sub.subbands) out.subbands.push_back(std::move(t));
  }
  return out;
}

/// Synthesis inverse of packet_decompose.
template <typename T>
Tensor4<T> packet_reconstruct(const SubbandSet<T>& set, const WaveletFilterPair& filters) {
  const std::int64_t k = set.count();
  if (k == 0) throw ShapeError("empty subband set");
  std::int64_t expect = 1;
  for (int i = 0; i < set.levels; ++i) expect *= 4;
  if (k != expect)
    throw ShapeError("subband count " + std::to_string(k) + " does not match 4^" +
                     std::to_string(set.levels));
  if (set.levels == 0) return set.subbands.front();

  const std::int64_t quarter = k / 4;
  std::vector<Tensor4<T>> parents;
  parents.reserve(4);
  for (int part = 0; part < 4; ++part) {
    SubbandSet<T> sub;
    sub.levels = set.levels - 1;
    sub.subbands.assign(set.subbands.begin() + part * quarter,
                        set.subbands.begin() + (part + 1) * quarter);
    parents.push_back(packet_reconstruct(sub, filters));
  }
  return idwt2d_level(QuadSplit<T>{std::move(parents[0]), std::move(parents[1]),
                                   std::move(parents[2]), std::move(parents[3])},
                      filters);
}

/// Per-subband fraction of coefficients with |value| < eps.
template <typename T>
std::vector<double> subband_sparsity(const SubbandSet<T>& set, double eps) {
  if (eps <= 0) throw DomainError("sparsity threshold must be positive");
  std::vector<double> out;
  out.reserve(set.subbands.size());
  for (const auto& t : set.subbands) {
    std::int64_t near_zero = 0;
    for (std::int64_t i = 0; i < t.size(); ++i)
      if (std::abs(static_cast<double>(t.data()[i])) < eps) ++near_zero;
    out.push_back(static_cast<double>(near_zero) / static_cast<double>(t.size()));
  }
  return out;
}

}  // namespace subband
