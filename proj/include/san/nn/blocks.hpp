// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "san/nn/layers.hpp"

namespace san::nn {

// conv3x3(stride) -> BN -> ReLU -> conv3x3 -> BN, plus an identity or projected
// (1x1 conv + BN) shortcut, followed by ReLU.
template <typename T>
class ResidualBlock {
 public:
  struct Cache {
    typename Conv2d<T>::Cache conv1, conv2, proj;
    typename BatchNorm2d<T>::Cache bn1, bn2, proj_bn;
    typename Relu<T>::Cache relu1, relu_out;
  };

  ResidualBlock() = default;
  ResidualBlock(const std::string& name, int in, int out, int stride)
      : conv1_(name + ".conv1", in, out, 3, stride, 1, false),
        bn1_(name + ".bn1", out),
        conv2_(name + ".conv2", out, out, 3, 1, 1, false),
        bn2_(name + ".bn2", out),
        projected_(stride != 1 || in != out) {
    if (projected_) {
      proj_ = Conv2d<T>(name + ".proj", in, out, 1, stride, 0, false);
      proj_bn_ = BatchNorm2d<T>(name + ".proj_bn", out);
    }
  }

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    bn1_.init();
    bn2_.init();
    if (projected_) {
      proj_.init(rng, 1.0);
      proj_bn_.init();
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Cache* cache) {
    Tensor<T> h = conv1_.forward(x, cache ? &cache->conv1 : nullptr);
    h = bn1_.forward(h, mode, cache ? &cache->bn1 : nullptr);
    h = Relu<T>::forward(std::move(h), cache ? &cache->relu1 : nullptr);
    h = conv2_.forward(h, cache ? &cache->conv2 : nullptr);
    h = bn2_.forward(h, mode, cache ? &cache->bn2 : nullptr);
    if (projected_) {
      Tensor<T> s = proj_.forward(x, cache ? &cache->proj : nullptr);
      h += proj_bn_.forward(s, mode, cache ? &cache->proj_bn : nullptr);
    } else {
      h += x;
    }
    return Relu<T>::forward(std::move(h), cache ? &cache->relu_out : nullptr);
  }

  Tensor<T> backward(const Tensor<T>& dout, const Cache& cache, bool input_grad = true) {
    Tensor<T> dsum = Relu<T>::backward(dout, cache.relu_out);
    Tensor<T> dh = bn2_.backward(dsum, cache.bn2);
    dh = conv2_.backward(dh, cache.conv2);
    dh = Relu<T>::backward(std::move(dh), cache.relu1);
    dh = bn1_.backward(dh, cache.bn1);
    Tensor<T> dx = conv1_.backward(dh, cache.conv1, input_grad);
    if (projected_) {
      Tensor<T> ds = proj_bn_.backward(dsum, cache.proj_bn);
      ds = proj_.backward(ds, cache.proj, input_grad);
      if (input_grad) dx += ds;
    } else if (input_grad) {
      dx += dsum;
    }
    return dx;
  }

  void collect(ParamList<T>& out) {
    conv1_.collect(out);
    bn1_.collect(out);
    conv2_.collect(out);
    bn2_.collect(out);
    if (projected_) {
      proj_.collect(out);
      proj_bn_.collect(out);
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = conv1_.parameter_count() + bn1_.parameter_count() + conv2_.parameter_count() +
                    bn2_.parameter_count();
    if (projected_) n += proj_.parameter_count() + proj_bn_.parameter_count();
    return n;
  }

 private:
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  Conv2d<T> conv2_;
  BatchNorm2d<T> bn2_;
  bool projected_ = false;
  Conv2d<T> proj_;
  BatchNorm2d<T> proj_bn_;
};

// Nearest x2 upsample, then conv -> BN -> ReLU -> conv -> BN with a projected
// shortcut (1x1 conv + BN on the upsampled input), followed by ReLU.
template <typename T>
class UpsampleBlock {
 public:
  struct Cache {
    Shape input;
    typename Conv2d<T>::Cache conv1, conv2, proj;
    typename BatchNorm2d<T>::Cache bn1, bn2, proj_bn;
    typename Relu<T>::Cache relu1, relu_out;
  };

  UpsampleBlock() = default;
  UpsampleBlock(const std::string& name, int in, int out)
      : conv1_(name + ".conv1", in, out, 3, 1, 1, false),
        bn1_(name + ".bn1", out),
        conv2_(name + ".conv2", out, out, 3, 1, 1, false),
        bn2_(name + ".bn2", out),
        proj_(name + ".proj", in, out, 1, 1, 0, false),
        proj_bn_(name + ".proj_bn", out) {}

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    proj_.init(rng, 1.0);
    bn1_.init();
    bn2_.init();
    proj_bn_.init();
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Cache* cache) {
    if (cache) cache->input = x.shape();
    const Tensor<T> up = Upsample2<T>::forward(x);
    Tensor<T> h = conv1_.forward(up, cache ? &cache->conv1 : nullptr);
    h = bn1_.forward(h, mode, cache ? &cache->bn1 : nullptr);
    h = Relu<T>::forward(std::move(h), cache ? &cache->relu1 : nullptr);
    h = conv2_.forward(h, cache ? &cache->conv2 : nullptr);
    h = bn2_.forward(h, mode, cache ? &cache->bn2 : nullptr);
    Tensor<T> s = proj_.forward(up, cache ? &cache->proj : nullptr);
    h += proj_bn_.forward(s, mode, cache ? &cache->proj_bn : nullptr);
    return Relu<T>::forward(std::move(h), cache ? &cache->relu_out : nullptr);
  }

  Tensor<T> backward(const Tensor<T>& dout, const Cache& cache) {
    Tensor<T> dsum = Relu<T>::backward(dout, cache.relu_out);
    Tensor<T> dh = bn2_.backward(dsum, cache.bn2);
    dh = conv2_.backward(dh, cache.conv2);
    dh = Relu<T>::backward(std::move(dh), cache.relu1);
    dh = bn1_.backward(dh, cache.bn1);
    Tensor<T> dup = conv1_.backward(dh, cache.conv1);
    Tensor<T> ds = proj_bn_.backward(dsum, cache.proj_bn);
    dup += proj_.backward(ds, cache.proj);
    return Upsample2<T>::backward(dup);
  }

  void collect(ParamList<T>& out) {
    conv1_.collect(out);
    bn1_.collect(out);
    conv2_.collect(out);
    bn2_.collect(out);
    proj_.collect(out);
    proj_bn_.collect(out);
  }

  std::size_t parameter_count() const {
    return conv1_.parameter_count() + bn1_.parameter_count() + conv2_.parameter_count() + bn2_.parameter_count() +
           proj_.parameter_count() + proj_bn_.parameter_count();
  }

 private:
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  Conv2d<T> conv2_;
  BatchNorm2d<T> bn2_;
  Conv2d<T> proj_;
  BatchNorm2d<T> proj_bn_;
};

}  // namespace san::nn
