// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "subband/rng.hpp"
#include "subband/tensor.hpp"
#include "subband/wavelet.hpp"

using namespace subband;

namespace {

template <typename T>
Tensor4<T> random_image(Shape4 s, std::uint64_t seed) {
  Tensor4<T> t(s);
  CounterRng rng = CounterRng::stream(seed, 0);
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(rng.next_uniform());
  return t;
}

// Independent single-channel oracle: full periodic filtering of rows, then
// decimation, then the same along columns. Runs entirely in double.
struct OracleQuad {
  std::vector<double> ll, lh, hl, hh;
};

OracleQuad oracle_dwt(const std::vector<double>& img, int h, int w,
                      const std::vector<double>& lo, const std::vector<double>& hi) {
  auto filter_rows = [&](const std::vector<double>& src, const std::vector<double>& f) {
    std::vector<double> full(static_cast<std::size_t>(h * w));
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double acc = 0;
        for (std::size_t t = 0; t < f.size(); ++t)
          acc += f[t] * src[static_cast<std::size_t>(i * w + (j + static_cast<int>(t)) % w)];
        full[static_cast<std::size_t>(i * w + j)] = acc;
      }
    std::vector<double> dec(static_cast<std::size_t>(h * (w / 2)));
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w / 2; ++j)
        dec[static_cast<std::size_t>(i * (w / 2) + j)] = full[static_cast<std::size_t>(i * w + 2 * j)];
    return dec;
  };
  auto filter_cols = [&](const std::vector<double>& src, int cols, const std::vector<double>& f) {
    std::vector<double> full(static_cast<std::size_t>(h * cols));
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < h; ++i) {
        double acc = 0;
        for (std::size_t t = 0; t < f.size(); ++t)
          acc += f[t] * src[static_cast<std::size_t>(((i + static_cast<int>(t)) % h) * cols + j)];
        full[static_cast<std::size_t>(i * cols + j)] = acc;
      }
    std::vector<double> dec(static_cast<std::size_t>((h / 2) * cols));
    for (int i = 0; i < h / 2; ++i)
      for (int j = 0; j < cols; ++j)
        dec[static_cast<std::size_t>(i * cols + j)] = full[static_cast<std::size_t>(2 * i * cols + j)];
    return dec;
  };

  const auto row_lo = filter_rows(img, lo);
  const auto row_hi = filter_rows(img, hi);
  OracleQuad q;
  q.ll = filter_cols(row_lo, w / 2, lo);
  q.hl = filter_cols(row_lo, w / 2, hi);
  q.lh = filter_cols(row_hi, w / 2, lo);
  q.hh = filter_cols(row_hi, w / 2, hi);
  return q;
}

WaveletFilterPair db2_pair() {
  const double s3 = std::sqrt(3.0), n = 4.0 * std::sqrt(2.0);
  std::vector<double> lo = {(1 + s3) / n, (3 + s3) / n, (3 - s3) / n, (1 - s3) / n};
  std::vector<double> hi = {lo[3], -lo[2], lo[1], -lo[0]};
  return WaveletFilterPair(lo, hi);
}

}  // namespace

TEST_CASE("filter pair constructor enforces orthonormality and the mirror relation") {
  REQUIRE_NOTHROW(WaveletFilterPair::d2());
  REQUIRE_NOTHROW(db2_pair());

  const double s = 1.0 / std::sqrt(2.0);
  REQUIRE_THROWS_AS(WaveletFilterPair({0.5, 0.5}, {0.5, -0.5}), DomainError);
  REQUIRE_THROWS_AS(WaveletFilterPair({s, s}, {-s, s}), DomainError);
  REQUIRE_THROWS_AS(WaveletFilterPair({s, s}, {s}), ShapeError);
}

TEST_CASE("one analysis level of a constant image concentrates in ll") {
  const double v = 0.7;
  auto x = Tensor4<float>::full({1, 2, 2, 1}, static_cast<float>(v));
  auto q = dwt2d_level(x, WaveletFilterPair::d2());
  REQUIRE(q.ll(0, 0, 0, 0) == Catch::Approx(2 * v).margin(1e-6));
  REQUIRE(std::abs(q.lh(0, 0, 0, 0)) < 1e-7);
  REQUIRE(std::abs(q.hl(0, 0, 0, 0)) < 1e-7);
  REQUIRE(std::abs(q.hh(0, 0, 0, 0)) < 1e-7);
}

TEST_CASE("hand-evaluated 2x2 analysis") {
  Tensor4<float> x({1, 2, 2, 1}, {1.0f, 2.0f, 3.0f, 4.0f});
  auto q = dwt2d_level(x, WaveletFilterPair::d2());
  CHECK(q.ll(0, 0, 0, 0) == Catch::Approx(5.0).margin(1e-6));
  CHECK(q.lh(0, 0, 0, 0) == Catch::Approx(-1.0).margin(1e-6));
  CHECK(q.hl(0, 0, 0, 0) == Catch::Approx(-2.0).margin(1e-6));
  CHECK(q.hh(0, 0, 0, 0) == Catch::Approx(0.0).margin(1e-6));

  const double energy =
      sum_sq(q.ll) + sum_sq(q.lh) + sum_sq(q.hl) + sum_sq(q.hh);
  CHECK(energy == Catch::Approx(30.0).epsilon(1e-5));
}

TEST_CASE("analysis level matches the filter-and-decimate oracle") {
  const int h = 8, w = 8;
  auto x = random_image<float>({1, h, w, 1}, 31);
  std::vector<double> img(static_cast<std::size_t>(h * w));
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) img[static_cast<std::size_t>(i * w + j)] = x(0, i, j, 0);

  for (const auto& pair : {WaveletFilterPair::d2(), db2_pair()}) {
    auto q = dwt2d_level(x, pair);
    auto o = oracle_dwt(img, h, w, pair.low(), pair.high());
    for (int i = 0; i < h / 2; ++i)
      for (int j = 0; j < w / 2; ++j) {
        const auto k = static_cast<std::size_t>(i * (w / 2) + j);
        CHECK(q.ll(0, i, j, 0) == Catch::Approx(o.ll[k]).margin(1e-5));
        CHECK(q.lh(0, i, j, 0) == Catch::Approx(o.lh[k]).margin(1e-5));
        CHECK(q.hl(0, i, j, 0) == Catch::Approx(o.hl[k]).margin(1e-5));
        CHECK(q.hh(0, i, j, 0) == Catch::Approx(o.hh[k]).margin(1e-5));
      }
  }
}

TEST_CASE("odd extents are rejected") {
  auto x = Tensor4<float>::zeros({1, 3, 4, 1});
  REQUIRE_THROWS_AS(dwt2d_level(x, WaveletFilterPair::d2()), ShapeError);
  auto y = Tensor4<float>::zeros({1, 4, 6, 1});
  REQUIRE_THROWS_AS(packet_decompose(y, 2, WaveletFilterPair::d2()), ShapeError);
}

TEST_CASE("packet decomposition shapes and ordering") {
  auto mnist_like = Tensor4<float>::zeros({2, 28, 28, 1});
  auto s1 = packet_decompose(mnist_like, 1, WaveletFilterPair::d2());
  REQUIRE(s1.count() == 4);
  for (const auto& b : s1.subbands) REQUIRE(b.shape() == Shape4{2, 14, 14, 1});

  auto cifar_like = random_image<float>({1, 32, 32, 3}, 17);
  auto s2 = packet_decompose(cifar_like, 2, WaveletFilterPair::d2());
  REQUIRE(s2.count() == 16);
  std::int64_t coefficients = 0;
  for (const auto& b : s2.subbands) {
    REQUIRE(b.shape() == Shape4{1, 8, 8, 3});
    coefficients += b.size();
  }
  REQUIRE(coefficients == cifar_like.size());  // critical sampling

  auto s0 = packet_decompose(cifar_like, 0, WaveletFilterPair::d2());
  REQUIRE(s0.count() == 1);
  REQUIRE(max_abs_diff(s0.subbands[0], cifar_like) == 0.0);

  // Depth-first ordering: the first subband of a 2-level packet equals the
  // ll child of the ll child.
  auto lvl1 = dwt2d_level(cifar_like, WaveletFilterPair::d2());
  auto lvl2 = dwt2d_level(lvl1.ll, WaveletFilterPair::d2());
  REQUIRE(max_abs_diff(s2.subbands[0], lvl2.ll) == 0.0);
  // ...and subband 4 starts the lh branch.
  auto lh2 = dwt2d_level(lvl1.lh, WaveletFilterPair::d2());
  REQUIRE(max_abs_diff(s2.subbands[4], lh2.ll) == 0.0);
}

TEST_CASE("perfect reconstruction and energy conservation") {
  for (const auto& pair : {WaveletFilterPair::d2(), db2_pair()}) {
    for (int m = 1; m <= 3; ++m) {
      auto x32 = random_image<float>({2, 16, 16, 3}, 100 + static_cast<std::uint64_t>(m));
      auto set = packet_decompose(x32, m, pair);
      auto back = packet_reconstruct(set, pair);
      REQUIRE(max_abs_diff(back, x32) <= 1e-5);

      double subband_energy = 0;
      for (const auto& b : set.subbands) subband_energy += sum_sq(b);
      const double in_energy = sum_sq(x32);
      REQUIRE(std::abs(subband_energy - in_energy) / in_energy <= 1e-5);

      auto x64 = random_image<double>({1, 16, 16, 2}, 200 + static_cast<std::uint64_t>(m));
      auto set64 = packet_decompose(x64, m, pair);
      auto back64 = packet_reconstruct(set64, pair);
      REQUIRE(max_abs_diff(back64, x64) <= 1e-12);
    }
  }
}

TEST_CASE("reconstruction degenerate cases") {
  auto x = Tensor4<float>::full({1, 4, 4, 1}, 0.5f);
  auto set = packet_decompose(x, 1, WaveletFilterPair::d2());

  // All-zero subbands reconstruct the zero image.
  SubbandSet<float> zeros = set;
  for (auto& b : zeros.subbands) b = Tensor4<float>::zeros(b.shape());
  auto z = packet_reconstruct(zeros, WaveletFilterPair::d2());
  REQUIRE(sum_sq(z) == 0.0);

  // A constant image lives entirely in ll.
  SubbandSet<float> ll_only = set;
  for (std::size_t k = 1; k < ll_only.subbands.size(); ++k)
    ll_only.subbands[k] = Tensor4<float>::zeros(ll_only.subbands[k].shape());
  auto back = packet_reconstruct(ll_only, WaveletFilterPair::d2());
  REQUIRE(max_abs_diff(back, x) <= 1e-6);

  // Inconsistent shapes are rejected.
  SubbandSet<float> bad = set;
  bad.subbands[2] = Tensor4<float>::zeros({1, 4, 4, 1});
  REQUIRE_THROWS_AS(packet_reconstruct(bad, WaveletFilterPair::d2()), ShapeError);
}

TEST_CASE("subband sparsity fractions") {
  auto constant = Tensor4<float>::full({1, 4, 4, 1}, 0.5f);
  auto set = packet_decompose(constant, 1, WaveletFilterPair::d2());
  auto frac = subband_sparsity(set, 1e-6);
  REQUIRE(frac == std::vector<double>{0.0, 1.0, 1.0, 1.0});

  auto zero = Tensor4<float>::zeros({1, 4, 4, 1});
  auto zset = packet_decompose(zero, 1, WaveletFilterPair::d2());
  for (double f : subband_sparsity(zset, 1e-6)) REQUIRE(f == 1.0);

  REQUIRE_THROWS_AS(subband_sparsity(set, 0.0), DomainError);
}
