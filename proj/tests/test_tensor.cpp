// Copyright (c) 2026 The subband project authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>
#include <vector>

#include "subband/hash.hpp"
#include "subband/rng.hpp"
#include "subband/tensor.hpp"
#include "subband/tensor_io.hpp"
#include "subband/thread_pool.hpp"

using namespace subband;

namespace {

Tensor4<float> random_tensor(Shape4 s, std::uint64_t seed) {
  Tensor4<float> t(s);
  CounterRng rng = CounterRng::stream(seed, 0);
  for (std::int64_t i = 0; i < t.size(); ++i)
    t.data()[i] = static_cast<float>(rng.next_uniform() * 2.0 - 1.0);
  return t;
}

}  // namespace

TEST_CASE("zeros produces the requested shape with all elements zero") {
  auto a = Tensor4<float>::zeros({1, 2, 2, 1});
  REQUIRE(a.size() == 4);
  auto b = Tensor4<float>::zeros({2, 3, 3, 4});
  REQUIRE(b.size() == 72);
  auto c = Tensor4<float>::zeros({1, 1, 1, 1});
  REQUIRE(c.size() == 1);
  for (const auto* t : {&a, &b, &c})
    for (std::int64_t i = 0; i < t->size(); ++i) REQUIRE(t->data()[i] == 0.0f);
}

TEST_CASE("zero-sized dimensions are rejected") {
  REQUIRE_THROWS_AS(Tensor4<float>::zeros({0, 2, 2, 1}), ShapeError);
  REQUIRE_THROWS_AS(Tensor4<float>::zeros({1, 2, 0, 1}), ShapeError);
}

TEST_CASE("elementwise add, sub, mul, scale") {
  Tensor4<float> a({1, 1, 2, 1}, {1.0f, 2.0f});
  Tensor4<float> b({1, 1, 2, 1}, {3.0f, 4.0f});
  auto s = add(a, b);
  REQUIRE(s.data()[0] == 4.0f);
  REQUIRE(s.data()[1] == 6.0f);
  auto h = scale(a, 0.5f);
  REQUIRE(h.data()[0] == 0.5f);
  REQUIRE(h.data()[1] == 1.0f);
  auto z = mul(a, Tensor4<float>::zeros(a.shape()));
  REQUIRE(z.data()[0] == 0.0f);
  REQUIRE(z.data()[1] == 0.0f);
  REQUIRE(sub(s, b).data()[1] == 2.0f);

  Tensor4<float> wrong({1, 2, 1, 1}, {0.0f, 0.0f});
  REQUIRE_THROWS_AS(add(a, wrong), ShapeError);
}

TEST_CASE("add is commutative and associative within float tolerance") {
  auto a = random_tensor({2, 4, 4, 3}, 1);
  auto b = random_tensor({2, 4, 4, 3}, 2);
  auto c = random_tensor({2, 4, 4, 3}, 3);
  REQUIRE(max_abs_diff(add(a, b), add(b, a)) == 0.0);
  REQUIRE(max_abs_diff(add(add(a, b), c), add(a, add(b, c))) < 1e-6);
}

TEST_CASE("sum_sq matches a naive loop oracle") {
  Tensor4<float> v({1, 1, 2, 1}, {3.0f, 4.0f});
  REQUIRE(sum_sq(v) == 25.0);
  REQUIRE(sum_sq(Tensor4<float>::zeros({2, 2, 2, 2})) == 0.0);

  auto t = random_tensor({1, 4, 4, 1}, 7);
  double oracle = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i) {
    const double x = t.data()[i];
    oracle += x * x;
  }
  REQUIRE(sum_sq(t) == oracle);  // same accumulation order, bit-for-bit
}

TEST_CASE("indexing round-trips written values") {
  Tensor4<float> t({2, 3, 4, 5});
  CounterRng rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<std::int64_t>(rng.next_below(2));
    const auto h = static_cast<std::int64_t>(rng.next_below(3));
    const auto w = static_cast<std::int64_t>(rng.next_below(4));
    const auto c = static_cast<std::int64_t>(rng.next_below(5));
    const float val = static_cast<float>(rng.next_uniform());
    t(n, h, w, c) = val;
    REQUIRE(t(n, h, w, c) == val);
  }
}

TEST_CASE("library ops keep finite inputs finite") {
  auto a = random_tensor({2, 8, 8, 3}, 11);
  auto b = random_tensor({2, 8, 8, 3}, 12);
  REQUIRE(all_finite(add(a, b)));
  REQUIRE(all_finite(mul(a, b)));
  REQUIRE(all_finite(scale(a, 1e30f)));
}

TEST_CASE("tensor file round-trip and header layout") {
  auto t = random_tensor({2, 3, 4, 5}, 21);
  std::stringstream buf;
  write_tensor(buf, t);

  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 24 + static_cast<std::size_t>(t.size()) * 4);
  REQUIRE(bytes.substr(0, 4) == "TNS4");
  REQUIRE(bytes[4] == 1);  // f32 code
  REQUIRE(static_cast<unsigned char>(bytes[8]) == 2);  // n, little-endian
  REQUIRE(static_cast<unsigned char>(bytes[12]) == 3);
  REQUIRE(static_cast<unsigned char>(bytes[16]) == 4);
  REQUIRE(static_cast<unsigned char>(bytes[20]) == 5);

  auto back = read_tensor<float>(buf);
  REQUIRE(back.shape() == t.shape());
  REQUIRE(max_abs_diff(back, t) == 0.0);
}

TEST_CASE("tensor file precision converts on read") {
  Tensor4<double> t({1, 1, 1, 3}, {0.25, -1.5, 3.0});
  std::stringstream buf;
  write_tensor(buf, t);
  auto back = read_tensor<float>(buf);
  REQUIRE(back.data()[0] == 0.25f);
  REQUIRE(back.data()[1] == -1.5f);
  REQUIRE(back.data()[2] == 3.0f);
}

TEST_CASE("corrupt tensor files are rejected") {
  auto t = random_tensor({1, 2, 2, 1}, 5);
  std::stringstream buf;
  write_tensor(buf, t);
  const std::string bytes = buf.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  REQUIRE_THROWS_AS(read_tensor<float>(truncated), CorruptDataError);

  std::string mangled = bytes;
  mangled[0] = 'X';
  std::stringstream bad(mangled);
  REQUIRE_THROWS_AS(read_tensor<float>(bad), CorruptDataError);
}

TEST_CASE("counter rng is reproducible and counter-addressable") {
  CounterRng a = CounterRng::stream(42, 7);
  CounterRng b = CounterRng::stream(42, 7);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
  REQUIRE(a.at(3) == CounterRng::stream(42, 7).at(3));
  REQUIRE(CounterRng::stream(42, 7).at(0) != CounterRng::stream(42, 8).at(0));
  REQUIRE(CounterRng::stream(42, 7).at(0) != CounterRng::stream(43, 7).at(0));
}

TEST_CASE("normal draws have unit moments") {
  CounterRng rng = CounterRng::stream(123, 0);
  const int n = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sum2 / n - mean * mean);
  REQUIRE(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(stddev == Catch::Approx(1.0).epsilon(0.01));
}

TEST_CASE("uniform and bounded draws stay in range") {
  CounterRng rng = CounterRng::stream(5, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.next_below(17) < 17);
  }
}

TEST_CASE("random_permutation is a bijection") {
  auto p = random_permutation(1000, CounterRng::stream(9, 0));
  std::vector<bool> seen(1000, false);
  for (auto v : p) {
    REQUIRE(v >= 0);
    REQUIRE(v < 1000);
    REQUIRE(!seen[static_cast<std::size_t>(v)]);
    seen[static_cast<std::size_t>(v)] = true;
  }
  auto q = random_permutation(1000, CounterRng::stream(9, 0));
  REQUIRE(p == q);
  auto r = random_permutation(1000, CounterRng::stream(10, 0));
  REQUIRE(p != r);
}

TEST_CASE("sha256 matches known vectors") {
  REQUIRE(sha256_hex("", 0) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  REQUIRE(sha256_hex("abc", 3) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::string longish(1000, 'a');
  Sha256 h;
  h.update(longish.data(), 400);
  h.update(longish.data(), 600);
  REQUIRE(h.hex_digest() == sha256_hex(longish.data(), 1000));
}

TEST_CASE("parallel_for runs every item exactly once") {
  ThreadPool pool(4);
  std::vector<std::atomic<int>> hits(1000);
  pool.parallel_for(1000, [&](std::int64_t i) { hits[static_cast<std::size_t>(i)]++; });
  for (auto& h : hits) REQUIRE(h.load() == 1);

  // Dispatch from two threads at once.
  std::atomic<long> total{0};
  std::thread t1([&] { pool.parallel_for(500, [&](std::int64_t) { total++; }); });
  std::thread t2([&] { pool.parallel_for(500, [&](std::int64_t) { total++; }); });
  t1.join();
  t2.join();
  REQUIRE(total.load() == 1000);
}
