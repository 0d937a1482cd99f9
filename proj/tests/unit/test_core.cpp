// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "san/core/image.hpp"
#include "san/core/random.hpp"
#include "san/core/tensor.hpp"
#include "support.hpp"

using namespace san;

TEST_CASE("tensor indexing is NCHW row-major", "[core]") {
  Tensor<float> t(2, 3, 4, 5);
  REQUIRE(t.size() == 120);
  REQUIRE(t.index(1, 2, 3, 4) == 119);
  REQUIRE(t.index(0, 1, 0, 0) == 20);
  t.at(1, 0, 2, 3) = 7.f;
  REQUIRE(t.sample(1)[2 * 5 + 3] == 7.f);
}

TEST_CASE("tensor storage is 64-byte aligned", "[core]") {
  for (int n : {1, 3, 17, 129}) {
    Tensor<float> t(n, 3, 5, 7);
    REQUIRE(reinterpret_cast<std::uintptr_t>(t.data()) % 64 == 0);
    Tensor<double> d(n, 1, 1, 3);
    REQUIRE(reinterpret_cast<std::uintptr_t>(d.data()) % 64 == 0);
  }
}

TEST_CASE("gather copies selected samples in order", "[core]") {
  Tensor<int> t(4, 1, 1, 2);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<int>(k);
  const std::vector<int> rows{3, 0, 3};
  const Tensor<int> g = t.gather(rows);
  REQUIRE(g.n() == 3);
  CHECK(g.at(0, 0, 0, 0) == 6);
  CHECK(g.at(1, 0, 0, 1) == 1);
  CHECK(g.at(2, 0, 0, 1) == 7);
}

TEST_CASE("tensor add rejects mismatched shapes", "[core]") {
  Tensor<float> a(1, 2, 2, 2), b(1, 2, 2, 3);
  REQUIRE_THROWS_AS(a += b, InputError);
}

TEST_CASE("png round trip equals quantization", "[core]") {
  const auto dir = test::scratch_dir("core_png");
  Image img(7, 5);
  Rng rng(3);
  for (float& v : img.values()) v = static_cast<float>(uniform(rng, 0.0, 1.0));
  write_png(dir / "a.png", img);
  const Image back = read_png(dir / "a.png");
  REQUIRE(back == quantize(img));
  REQUIRE(quantize(back) == back);
}

TEST_CASE("reading a missing png is a data error", "[core]") {
  REQUIRE_THROWS_AS(read_png("/nonexistent/x.png"), DataError);
}

TEST_CASE("derived seeds are stable and tag sensitive", "[core]") {
  REQUIRE(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
  REQUIRE(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
  REQUIRE(derive_seed(7, {1}) != derive_seed(8, {1}));
}

TEST_CASE("rng state survives a text round trip", "[core]") {
  Rng a(11);
  for (int i = 0; i < 5; ++i) a();
  Rng b;
  restore_rng(b, rng_state(a));
  for (int i = 0; i < 10; ++i) REQUIRE(a() == b());
}

TEST_CASE("bilinear resize of a constant image is constant", "[core]") {
  Image img(8, 4, {0.2f, 0.4f, 0.6f});
  const Image r = resize_bilinear(img, 16, 8);
  REQUIRE(r.height() == 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) REQUIRE(r.at(y, x, 1) == Catch::Approx(0.4f));
}
