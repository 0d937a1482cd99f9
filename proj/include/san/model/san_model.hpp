// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "san/core/random.hpp"
#include "san/core/tensor.hpp"
#include "san/model/config.hpp"
#include "san/nn/blocks.hpp"
#include "san/nn/layers.hpp"

namespace san::model {

using nn::Mode;
using nn::ParamList;
using nn::Parameter;

// Copyable wrapper around an atomic event counter.
class OpCounter {
 public:
  OpCounter() = default;
  OpCounter(const OpCounter& o) : value_(o.value_.load()) {}
  OpCounter& operator=(const OpCounter& o) {
    value_.store(o.value_.load());
    return *this;
  }
  void add(std::uint64_t n) const { value_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t value() const { return value_.load(); }
  void reset() const { value_.store(0); }

 private:
  mutable std::atomic<std::uint64_t> value_{0};
};

// Residual CNN with four stages; output is the stage-4 feature map.
template <typename T>
class Encoder {
 public:
  struct Cache {
    typename nn::Conv2d<T>::Cache stem;
    typename nn::BatchNorm2d<T>::Cache stem_bn;
    typename nn::Relu<T>::Cache stem_relu;
    typename nn::MaxPool2<T>::Cache pool;
    std::array<typename nn::ResidualBlock<T>::Cache, kStageCount> stages;
  };

  Encoder() = default;
  explicit Encoder(const EncoderConfig& cfg)
      : cfg_(cfg),
        stem_("encoder.stem.conv", 3, cfg.stem_width, 3, 2, 1, false),
        stem_bn_("encoder.stem.bn", cfg.stem_width) {
    cfg.validate();
    int in = cfg.stem_width;
    for (int s = 0; s < kStageCount; ++s) {
      stages_[static_cast<std::size_t>(s)] = nn::ResidualBlock<T>(
          "encoder.stage" + std::to_string(s + 1), in, cfg.widths[static_cast<std::size_t>(s)], cfg.stage_stride(s));
      in = cfg.widths[static_cast<std::size_t>(s)];
    }
  }

  const EncoderConfig& config() const { return cfg_; }

  void init(Rng& rng) {
    stem_.init(rng);
    stem_bn_.init();
    for (auto& s : stages_) s.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Cache* cache) {
    require_input(x.c() == 3 && x.h() == cfg_.input_height && x.w() == cfg_.input_width,
                  "encoder expects N x 3 x " + std::to_string(cfg_.input_height) + " x " +
                      std::to_string(cfg_.input_width) + ", got " + x.shape().str());
    Tensor<T> h = stem_.forward(x, cache ? &cache->stem : nullptr);
    h = stem_bn_.forward(h, mode, cache ? &cache->stem_bn : nullptr);
    h = nn::Relu<T>::forward(std::move(h), cache ? &cache->stem_relu : nullptr);
    h = nn::MaxPool2<T>::forward(h, cache ? &cache->pool : nullptr);
    for (int s = 0; s < kStageCount; ++s) {
      h = stages_[static_cast<std::size_t>(s)].forward(h, mode, cache ? &cache->stages[static_cast<std::size_t>(s)]
                                                                      : nullptr);
    }
    return h;
  }

  // Parameter gradients only; the image gradient is never needed.
  void backward(const Tensor<T>& dfeat, const Cache& cache) {
    Tensor<T> g = dfeat;
    for (int s = kStageCount - 1; s >= 0; --s) g = stages_[static_cast<std::size_t>(s)].backward(g, cache.stages[static_cast<std::size_t>(s)]);
    g = nn::MaxPool2<T>::backward(g, cache.pool);
    g = nn::Relu<T>::backward(std::move(g), cache.stem_relu);
    g = stem_bn_.backward(g, cache.stem_bn);
    stem_.backward(g, cache.stem, false);
  }

  void collect(ParamList<T>& out) {
    stem_.collect(out);
    stem_bn_.collect(out);
    for (auto& s : stages_) s.collect(out);
  }

  std::size_t parameter_count() const {
    std::size_t n = stem_.parameter_count() + stem_bn_.parameter_count();
    for (const auto& s : stages_) n += s.parameter_count();
    return n;
  }

 private:
  EncoderConfig cfg_;
  nn::Conv2d<T> stem_;
  nn::BatchNorm2d<T> stem_bn_;
  std::array<nn::ResidualBlock<T>, kStageCount> stages_;
};

template <typename T>
struct DecoderOutput {
  Tensor<T> texture;                     // N x 3 x H_t x W_t, values in (0, 1)
  std::array<Tensor<T>, kTapCount> taps;  // outputs of upsampling blocks 1..3
};

// 1x1 projection + bilinear resize to a square bridge, four residual x2
// upsampling blocks, then a 3x3 conv and sigmoid.
template <typename T>
class Decoder {
 public:
  struct Cache {
    Shape input;
    typename nn::Conv2d<T>::Cache bridge;
    typename nn::BatchNorm2d<T>::Cache bridge_bn;
    typename nn::Relu<T>::Cache bridge_relu;
    Shape bridge_pre_resize;
    std::array<typename nn::UpsampleBlock<T>::Cache, kDecoderBlocks> blocks;
    typename nn::Conv2d<T>::Cache head;
    typename nn::Sigmoid<T>::Cache sigmoid;
  };

  Decoder() = default;
  Decoder(const DecoderConfig& cfg, int in_channels)
      : cfg_(cfg),
        bridge_("decoder.bridge.conv", in_channels, cfg.bridge_channels, 1, 1, 0, false),
        bridge_bn_("decoder.bridge.bn", cfg.bridge_channels),
        resize_(cfg.bridge_size, cfg.bridge_size) {
    cfg.validate();
    int in = cfg.bridge_channels;
    for (int b = 0; b < kDecoderBlocks; ++b) {
      blocks_[static_cast<std::size_t>(b)] =
          nn::UpsampleBlock<T>("decoder.block" + std::to_string(b + 1), in, cfg.widths[static_cast<std::size_t>(b)]);
      in = cfg.widths[static_cast<std::size_t>(b)];
    }
    head_ = nn::Conv2d<T>("decoder.head.conv", in, 3, 3, 1, 1, true);
  }

  const DecoderConfig& config() const { return cfg_; }

  void init(Rng& rng) {
    bridge_.init(rng);
    bridge_bn_.init();
    for (auto& b : blocks_) b.init(rng);
    head_.init(rng, 1.0);
  }

  DecoderOutput<T> forward(const Tensor<T>& f, Mode mode, Cache* cache) {
    invocations_.add(1);
    if (cache) cache->input = f.shape();
    Tensor<T> h = bridge_.forward(f, cache ? &cache->bridge : nullptr);
    h = bridge_bn_.forward(h, mode, cache ? &cache->bridge_bn : nullptr);
    h = nn::Relu<T>::forward(std::move(h), cache ? &cache->bridge_relu : nullptr);
    if (cache) cache->bridge_pre_resize = h.shape();
    h = resize_.forward(h);
    DecoderOutput<T> out;
    for (int b = 0; b < kDecoderBlocks; ++b) {
      h = blocks_[static_cast<std::size_t>(b)].forward(h, mode, cache ? &cache->blocks[static_cast<std::size_t>(b)]
                                                                      : nullptr);
      if (b < kTapCount) out.taps[static_cast<std::size_t>(b)] = h;
    }
    h = head_.forward(h, cache ? &cache->head : nullptr);
    out.texture = nn::Sigmoid<T>::forward(std::move(h), cache ? &cache->sigmoid : nullptr);
    return out;
  }

  // `dtaps[b]` may be empty when no loss touches that tap.
  Tensor<T> backward(const Tensor<T>& dtexture, const std::array<Tensor<T>, kTapCount>& dtaps, const Cache& cache) {
    Tensor<T> g = nn::Sigmoid<T>::backward(dtexture, cache.sigmoid);
    g = head_.backward(g, cache.head);
    for (int b = kDecoderBlocks - 1; b >= 0; --b) {
      if (b < kTapCount && !dtaps[static_cast<std::size_t>(b)].empty()) g += dtaps[static_cast<std::size_t>(b)];
      g = blocks_[static_cast<std::size_t>(b)].backward(g, cache.blocks[static_cast<std::size_t>(b)]);
    }
    g = resize_.backward(g, cache.bridge_pre_resize);
    g = nn::Relu<T>::backward(std::move(g), cache.bridge_relu);
    g = bridge_bn_.backward(g, cache.bridge_bn);
    return bridge_.backward(g, cache.bridge);
  }

  void collect(ParamList<T>& out) {
    bridge_.collect(out);
    bridge_bn_.collect(out);
    for (auto& b : blocks_) b.collect(out);
    head_.collect(out);
  }

  std::size_t parameter_count() const {
    std::size_t n = bridge_.parameter_count() + bridge_bn_.parameter_count() + head_.parameter_count();
    for (const auto& b : blocks_) n += b.parameter_count();
    return n;
  }

  const OpCounter& invocations() const { return invocations_; }

 private:
  DecoderConfig cfg_;
  nn::Conv2d<T> bridge_;
  nn::BatchNorm2d<T> bridge_bn_;
  nn::BilinearResize<T> resize_;
  std::array<nn::UpsampleBlock<T>, kDecoderBlocks> blocks_;
  nn::Conv2d<T> head_;
  OpCounter invocations_;
};

enum class Pass {
  kTrain,      // batch statistics, caches kept for backward
  kEval,       // running statistics, decoder executed
  kRetrieval,  // running statistics, decoder skipped
};

template <typename T>
struct ForwardResult {
  Tensor<T> feature_map;  // f_e4
  Tensor<T> embedding;    // N x c x 1 x 1
  Tensor<T> logits;       // N x classes x 1 x 1 (empty without classifier)
  std::optional<DecoderOutput<T>> decoded;
};

template <typename T>
struct ForwardCache {
  typename Encoder<T>::Cache encoder;
  typename Decoder<T>::Cache decoder;
  typename nn::Linear<T>::Cache classifier;
  Shape feature_shape;
  bool decoded = false;
};

// Gradients of the training objective with respect to the forward outputs.
// Empty tensors mean "no gradient flows from this output".
template <typename T>
struct OutputGrads {
  Tensor<T> embedding;
  Tensor<T> logits;
  Tensor<T> texture;
  std::array<Tensor<T>, kTapCount> taps;
};

// Encoder + pooled embedding + optional identity classifier + optional texture decoder.
template <typename T>
class SanModel {
 public:
  SanModel() = default;
  explicit SanModel(const ModelConfig& cfg) : cfg_(cfg), encoder_(cfg.encoder) {
    cfg.validate();
    if (cfg.with_decoder) decoder_.emplace(cfg.decoder, cfg.encoder.feature_channels());
    if (cfg.num_classes > 0) classifier_.emplace("classifier", cfg.encoder.feature_channels(), cfg.num_classes);
  }

  const ModelConfig& config() const { return cfg_; }
  bool has_decoder() const { return decoder_.has_value(); }
  bool has_classifier() const { return classifier_.has_value(); }

  void init(std::uint64_t seed) {
    Rng body(derive_seed(seed, {0xe7c}));
    encoder_.init(body);
    if (decoder_) decoder_->init(body);
    init_classifier(seed);
  }

  void init_classifier(std::uint64_t seed) {
    if (!classifier_) return;
    Rng rng(derive_seed(seed, {0xc1a55}));
    classifier_->init(rng, 0.01);
  }

  Tensor<T> encode(const Tensor<T>& images, Mode mode, typename Encoder<T>::Cache* cache = nullptr) {
    return encoder_.forward(images, mode, cache);
  }

  static Tensor<T> pool(const Tensor<T>& feature_map) { return nn::GlobalAvgPool<T>::forward(feature_map); }

  Tensor<T> classify(const Tensor<T>& embedding, typename nn::Linear<T>::Cache* cache = nullptr) const {
    require_config(classifier_.has_value(), "model has no identity classifier");
    return classifier_->forward(embedding, cache);
  }

  DecoderOutput<T> decode(const Tensor<T>& feature_map, Mode mode, typename Decoder<T>::Cache* cache = nullptr) {
    require_config(decoder_.has_value(), "model has no decoder");
    return decoder_->forward(feature_map, mode, cache);
  }

  ForwardResult<T> forward(const Tensor<T>& images, Pass pass, ForwardCache<T>* cache = nullptr) {
    const Mode mode = pass == Pass::kTrain ? Mode::kTrain : Mode::kEval;
    ForwardResult<T> r;
    r.feature_map = encode(images, mode, cache ? &cache->encoder : nullptr);
    r.embedding = pool(r.feature_map);
    if (classifier_) r.logits = classify(r.embedding, cache ? &cache->classifier : nullptr);
    if (decoder_ && pass != Pass::kRetrieval) r.decoded = decode(r.feature_map, mode, cache ? &cache->decoder : nullptr);
    if (cache) {
      cache->feature_shape = r.feature_map.shape();
      cache->decoded = r.decoded.has_value();
    }
    return r;
  }

  void backward(const OutputGrads<T>& g, const ForwardCache<T>& cache) {
    Tensor<T> demb = g.embedding.empty() ? Tensor<T>(Shape{cache.feature_shape.n, cache.feature_shape.c, 1, 1})
                                         : g.embedding;
    if (classifier_ && !g.logits.empty()) demb += classifier_->backward(g.logits, cache.classifier);
    Tensor<T> dfeat = nn::GlobalAvgPool<T>::backward(demb, cache.feature_shape);
    const bool decoder_grad = !g.texture.empty() || std::any_of(g.taps.begin(), g.taps.end(),
                                                                [](const Tensor<T>& t) { return !t.empty(); });
    if (decoder_ && cache.decoded && decoder_grad) {
      Tensor<T> dtex = g.texture.empty() ? Tensor<T>(Shape{cache.feature_shape.n, 3, cfg_.decoder.output_height,
                                                           cfg_.decoder.output_width})
                                         : g.texture;
      dfeat += decoder_->backward(dtex, g.taps, cache.decoder);
    }
    encoder_.backward(dfeat, cache.encoder);
  }

  ParamList<T> parameters() {
    ParamList<T> out;
    encoder_.collect(out);
    if (decoder_) decoder_->collect(out);
    if (classifier_) classifier_->collect(out);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters())
      if (p->trainable) p->grad.zero();
  }

  std::size_t encoder_parameter_count() const { return encoder_.parameter_count(); }
  std::size_t decoder_parameter_count() const { return decoder_ ? decoder_->parameter_count() : 0; }
  std::size_t classifier_parameter_count() const { return classifier_ ? classifier_->parameter_count() : 0; }

  std::uint64_t decoder_invocations() const { return decoder_ ? decoder_->invocations().value() : 0; }
  void reset_decoder_invocations() const {
    if (decoder_) decoder_->invocations().reset();
  }

 private:
  ModelConfig cfg_;
  Encoder<T> encoder_;
  std::optional<Decoder<T>> decoder_;
  std::optional<nn::Linear<T>> classifier_;
};

}  // namespace san::model
