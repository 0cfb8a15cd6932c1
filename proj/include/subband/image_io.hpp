// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "subband/error.hpp"
#include "subband/tensor.hpp"

namespace subband {

/// 8-bit grayscale PGM (binary P5) of one (sample, channel) slice.
/// `centered` maps [-A, +A] to [0, 255] around mid-gray (A = max |value|),
/// suitable for zero-mean detail bands; otherwise min-max scaling.
template <typename T>
void write_pgm(const std::string& path, const Tensor4<T>& t, std::int64_t n, std::int64_t c,
               bool centered) {
  const Shape4 s = t.shape();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << s.w << " " << s.h << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(s.w));

  double lo = t(n, 0, 0, c), hi = lo;
  for (std::int64_t i = 0; i < s.h; ++i)
    for (std::int64_t j = 0; j < s.w; ++j) {
      const double v = t(n, i, j, c);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }

  for (std::int64_t i = 0; i < s.h; ++i) {
    for (std::int64_t j = 0; j < s.w; ++j) {
      const double v = t(n, i, j, c);
      double g;
      if (centered) {
        const double a = std::max(std::abs(lo), std::abs(hi));
        g = a == 0 ? 128.0 : 128.0 + 127.0 * v / a;
      } else {
        g = hi == lo ? 128.0 : 255.0 * (v - lo) / (hi - lo);
      }
      row[static_cast<std::size_t>(j)] =
          static_cast<unsigned char>(std::clamp(g, 0.0, 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(s.w));
  }
  if (!out) throw IoError("pgm write failed for " + path);
}

}  // namespace subband
