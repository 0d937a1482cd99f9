// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "san/nn/blocks.hpp"
#include "san/nn/layers.hpp"
#include "san/verify/verify.hpp"

using namespace san;
using namespace san::nn;

namespace {

Tensor<double> random_input(Rng& rng, Shape s) {
  Tensor<double> t(s);
  fill_normal(t, rng, 1.0);
  return t;
}

// Direct seven-loop convolution with zero padding.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b, int stride,
                          int pad) {
  const int co_n = w.n(), k = w.h();
  const int oh = (x.h() + 2 * pad - k) / stride + 1, ow = (x.w() + 2 * pad - k) / stride + 1;
  Tensor<double> y(x.n(), co_n, oh, ow);
  for (int n = 0; n < x.n(); ++n)
    for (int co = 0; co < co_n; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double s = b.empty() ? 0.0 : b[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < x.c(); ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= x.h() || ix < 0 || ix >= x.w()) continue;
                s += x.at(n, ci, iy, ix) * w.at(co, ci, ky, kx);
              }
          y.at(n, co, oy, ox) = s;
        }
  return y;
}

}  // namespace

TEST_CASE("conv2d matches a direct convolution", "[nn]") {
  Rng rng(5);
  struct Case {
    int in, out, k, stride, pad, h, w, n;
    bool bias;
  };
  for (const Case c : {Case{3, 4, 3, 1, 1, 7, 5, 2, true}, Case{2, 3, 3, 2, 1, 8, 6, 3, false},
                       Case{4, 2, 1, 1, 0, 5, 5, 1, true}, Case{1, 2, 7, 2, 3, 9, 8, 2, true}}) {
    Conv2d<double> conv("c", c.in, c.out, c.k, c.stride, c.pad, c.bias);
    conv.init(rng);
    ParamList<double> params;
    conv.collect(params);
    for (auto* p : params) fill_normal(p->value, rng, 0.5);
    const Tensor<double> x = random_input(rng, Shape{c.n, c.in, c.h, c.w});
    const Tensor<double> y = conv.forward(x, nullptr);
    const Tensor<double> ref =
        naive_conv(x, params[0]->value, c.bias ? params[1]->value : Tensor<double>(), c.stride, c.pad);
    REQUIRE(y.shape() == ref.shape());
    for (std::size_t k = 0; k < y.size(); ++k) REQUIRE(y[k] == Catch::Approx(ref[k]).margin(1e-12));
  }
}

TEST_CASE("conv2d rejects the wrong channel count", "[nn]") {
  Conv2d<float> conv("c", 3, 4, 3, 1, 1, false);
  REQUIRE_THROWS_AS(conv.forward(Tensor<float>(1, 2, 4, 4), nullptr), InputError);
}

TEST_CASE("global average pool", "[nn]") {
  Tensor<double> x(1, 1, 2, 2);
  x[0] = 1, x[1] = 2, x[2] = 3, x[3] = 4;
  REQUIRE(GlobalAvgPool<double>::forward(x)[0] == 2.5);

  Tensor<double> c(2, 3, 4, 2, 0.75);
  const Tensor<double> pooled = GlobalAvgPool<double>::forward(c);
  for (double v : pooled.values()) REQUIRE(v == 0.75);

  Rng rng(1);
  const Tensor<double> r = random_input(rng, Shape{3, 8, 4, 2});
  const Tensor<double> p = GlobalAvgPool<double>::forward(r);
  for (int n = 0; n < 3; ++n)
    for (int ch = 0; ch < 8; ++ch) {
      double s = 0;
      for (int y = 0; y < 4; ++y)
        for (int xx = 0; xx < 2; ++xx) s += r.at(n, ch, y, xx);
      REQUIRE(p.at(n, ch, 0, 0) == Catch::Approx(s / 8).margin(1e-6));
    }
}

TEST_CASE("linear layer", "[nn]") {
  Rng rng(2);
  Linear<double> fc("fc", 4, 4);
  const Tensor<double> x = random_input(rng, Shape{3, 4, 1, 1});

  const Tensor<double> zero = fc.forward(x, nullptr);
  for (double v : zero.values()) REQUIRE(v == 0.0);

  for (int i = 0; i < 4; ++i) fc.weight().value[static_cast<std::size_t>(i * 4 + i)] = 1.0;
  REQUIRE(fc.forward(x, nullptr).values().size() == x.size());
  const Tensor<double> id = fc.forward(x, nullptr);
  for (std::size_t k = 0; k < x.size(); ++k) REQUIRE(id[k] == x[k]);

  Linear<double> g("g", 4, 3);
  g.init(rng, 1.0);
  fill_normal(g.bias().value, rng, 1.0);
  const Tensor<double> y = g.forward(x, nullptr);
  for (int n = 0; n < 3; ++n)
    for (int o = 0; o < 3; ++o) {
      double s = g.bias().value[static_cast<std::size_t>(o)];
      for (int i = 0; i < 4; ++i) s += g.weight().value[static_cast<std::size_t>(o * 4 + i)] * x.at(n, i, 0, 0);
      REQUIRE(y.at(n, o, 0, 0) == Catch::Approx(s).margin(1e-12));
    }
}

TEST_CASE("relu and max pool", "[nn]") {
  Tensor<double> x(1, 1, 2, 4);
  const double v[] = {-1, 2, 3, -4, 0.5, -6, 7, 8};
  for (std::size_t k = 0; k < 8; ++k) x[k] = v[k];
  const Tensor<double> r = Relu<double>::forward(x, nullptr);
  REQUIRE(r[0] == 0.0);
  REQUIRE(r[4] == 0.5);
  const Tensor<double> m = MaxPool2<double>::forward(x, nullptr);
  REQUIRE(m.shape() == Shape{1, 1, 1, 2});
  REQUIRE(m[0] == 2.0);
  REQUIRE(m[1] == 8.0);
}

TEST_CASE("layer gradients agree with central differences", "[nn]") {
  verify::VerifyOptions opts;
  opts.instances = 40;
  for (const auto& c : verify::check_layer_gradients(opts)) {
    INFO(c.name << " max error " << c.max_error << " " << c.detail);
    REQUIRE(c.passed);
  }
}
