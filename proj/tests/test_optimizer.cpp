// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "subband/optimizer.hpp"
#include "subband/rng.hpp"
#include "subband/tensor.hpp"

using namespace subband;

namespace {

// Single scalar-parameter harness around the optimizer.
struct Scalar {
  Tensor4<double> w{{1, 1, 1, 1}};
  SgdOptimizer<double> opt{0.9, 0.0005};

  explicit Scalar(double w0, double momentum = 0.9, double decay = 0.0005)
      : opt(momentum, decay) {
    w.data()[0] = w0;
    opt.attach({&w});
  }

  void step(double grad, double lr) {
    Tensor4<double> g({1, 1, 1, 1});
    g.data()[0] = grad;
    std::vector<Tensor4<double>> grads;
    grads.push_back(std::move(g));
    opt.step({&w}, grads, lr);
  }
};

}  // namespace

TEST_CASE("single update matches direct substitution bit-for-bit") {
  Scalar s(1.0);
  s.step(1.0, 0.01);
  // v' = 0.9*0 - 0.0005*0.01*1 - 0.01*1 ; w' = 1 + v'
  const double v_expect = 0.9 * 0.0 - (0.0005 * 0.01) * 1.0 - 0.01 * 1.0;
  REQUIRE(s.opt.velocity()[0].data()[0] == v_expect);
  REQUIRE(s.w.data()[0] == 1.0 + v_expect);
  REQUIRE(s.opt.velocity()[0].data()[0] == Catch::Approx(-0.010005).margin(1e-12));
  REQUIRE(s.w.data()[0] == Catch::Approx(0.989995).margin(1e-12));
}

TEST_CASE("zero gradient leaves pure decay") {
  Scalar s(2.0);
  s.step(0.0, 0.01);
  // w' = w * (1 - 0.0005 * 0.01)
  REQUIRE(s.w.data()[0] == 2.0 * (1.0 - 5e-6));
}

TEST_CASE("learning rate zero is rejected, small lr changes nothing much") {
  Scalar s(1.0);
  REQUIRE_THROWS_AS(s.step(1.0, 0.0), ConfigError);
  REQUIRE_THROWS_AS(s.step(1.0, -0.1), ConfigError);
  Scalar tiny(1.0);
  tiny.step(1.0, 1e-300);
  REQUIRE(tiny.w.data()[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("velocity decays geometrically without gradient or decay") {
  Scalar s(0.0, 0.9, 0.0);
  s.opt.velocity()[0].data()[0] = 1.0;
  double v = 1.0;
  for (int l = 1; l <= 20; ++l) {
    s.step(0.0, 0.01);
    v *= 0.9;
    REQUIRE(s.opt.velocity()[0].data()[0] == Catch::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("no momentum, no decay reduces to plain gradient descent on a quadratic") {
  // L = w^2/2, dL/dw = w, so one step gives w * (1 - lr).
  Scalar s(3.0, 0.0, 0.0);
  s.step(3.0, 0.05);
  REQUIRE(s.w.data()[0] == Catch::Approx(3.0 * 0.95).epsilon(1e-12));
}

TEST_CASE("the update is elementwise: permuting parameters permutes results") {
  Tensor4<float> w({1, 1, 1, 5}, {0.5f, -1.0f, 2.0f, 0.0f, 1.5f});
  Tensor4<float> g({1, 1, 1, 5}, {0.1f, 0.2f, -0.3f, 0.4f, 0.0f});
  Tensor4<float> wp({1, 1, 1, 5}, {1.5f, 0.0f, 2.0f, -1.0f, 0.5f});
  Tensor4<float> gp({1, 1, 1, 5}, {0.0f, 0.4f, -0.3f, 0.2f, 0.1f});
  const std::vector<int> perm = {4, 3, 2, 1, 0};

  SgdOptimizer<float> a(0.9, 0.0005), b(0.9, 0.0005);
  a.attach({&w});
  b.attach({&wp});
  std::vector<Tensor4<float>> ga, gb;
  ga.push_back(g);
  gb.push_back(gp);
  a.step({&w}, ga, 0.01);
  b.step({&wp}, gb, 0.01);
  for (int i = 0; i < 5; ++i)
    REQUIRE(w.data()[i] == wp.data()[perm[static_cast<std::size_t>(i)]]);
}

TEST_CASE("shape mismatch between gradients and parameters is rejected") {
  Tensor4<float> w({1, 1, 1, 4});
  SgdOptimizer<float> opt(0.9, 0.0005);
  opt.attach({&w});
  std::vector<Tensor4<float>> bad;
  bad.emplace_back(Shape4{1, 1, 1, 3});
  REQUIRE_THROWS_AS(opt.step({&w}, bad, 0.01), ShapeError);
}

TEST_CASE("lr schedule: constant by default, multiplicative steps") {
  LrSchedule constant{0.01, {}};
  for (int e : {0, 1, 5, 100}) REQUIRE(constant.at(e) == 0.01);

  LrSchedule stepped{0.01, {{10, 0.1}}};
  REQUIRE(stepped.at(9) == 0.01);
  REQUIRE(stepped.at(10) == Catch::Approx(0.001).epsilon(1e-12));
  REQUIRE(stepped.at(11) == Catch::Approx(0.001).epsilon(1e-12));

  LrSchedule twice{0.01, {{5, 0.1}, {8, 0.5}}};
  REQUIRE(twice.at(7) == Catch::Approx(0.001).epsilon(1e-12));
  REQUIRE(twice.at(8) == Catch::Approx(0.0005).epsilon(1e-12));
}

TEST_CASE("initialization: gaussian weights, unit biases, seeded") {
  Tensor4<float> w({1, 1, 1000, 1000});
  Tensor4<float> b({1, 1, 1, 1000});
  init_params<float>({&w}, {&b}, 7);

  double sum = 0, sum2 = 0;
  for (std::int64_t i = 0; i < w.size(); ++i) {
    sum += w.data()[i];
    sum2 += static_cast<double>(w.data()[i]) * w.data()[i];
  }
  const double n = static_cast<double>(w.size());
  const double mean = sum / n;
  const double stddev = std::sqrt(sum2 / n - mean * mean);
  REQUIRE(std::abs(mean) <= 3.0 * (0.01 / std::sqrt(n)));
  REQUIRE(stddev == Catch::Approx(0.01).epsilon(0.01));

  for (std::int64_t i = 0; i < b.size(); ++i) REQUIRE(b.data()[i] == 1.0f);

  // Same seed, same draw; different seed, different draw.
  Tensor4<float> w2({1, 1, 1000, 1000});
  init_params<float>({&w2}, {}, 7);
  REQUIRE(max_abs_diff(w, w2) == 0.0);
  init_params<float>({&w2}, {}, 8);
  REQUIRE(max_abs_diff(w, w2) != 0.0);
}
