// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "san/model/checkpoint.hpp"
#include "san/model/san_model.hpp"
#include "support.hpp"

using namespace san;
using namespace san::model;

namespace {

Tensor<float> random_images(int n, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(n, 3, h, w);
  for (float& v : t.values()) v = static_cast<float>(uniform(rng, 0.0, 1.0));
  return t;
}

}  // namespace

TEST_CASE("toy model shapes", "[model]") {
  ModelConfig cfg = ModelConfig::toy();
  cfg.num_classes = 5;
  SanModel<float> m(cfg);
  m.init(1);
  const auto r = m.forward(random_images(2, 64, 32, 3), Pass::kTrain);
  REQUIRE(r.feature_map.shape() == Shape{2, 256, 4, 2});
  REQUIRE(r.embedding.shape() == Shape{2, 256, 1, 1});
  REQUIRE(r.logits.shape() == Shape{2, 5, 1, 1});
  REQUIRE(r.decoded.has_value());
  REQUIRE(r.decoded->texture.shape() == Shape{2, 3, 64, 64});
  REQUIRE(r.decoded->taps[0].h() == 8);
  REQUIRE(r.decoded->taps[1].h() == 16);
  REQUIRE(r.decoded->taps[2].h() == 32);
  for (float v : r.decoded->texture.values()) {
    REQUIRE(v > 0.f);
    REQUIRE(v < 1.f);
  }
}

TEST_CASE("paper-scale model shapes", "[model]") {
  SanModel<float> m(ModelConfig::paper_scale());
  m.init(2);
  const auto r = m.forward(random_images(1, 256, 128, 4), Pass::kEval);
  REQUIRE(r.feature_map.h() == 16);
  REQUIRE(r.feature_map.w() == 8);
  REQUIRE(r.decoded->texture.shape() == Shape{1, 3, 256, 256});
}

TEST_CASE("decoder is about a third of the encoder", "[model]") {
  for (const ModelConfig& cfg : {ModelConfig::toy(), ModelConfig::paper_scale()}) {
    SanModel<float> m(cfg);
    const double ratio = static_cast<double>(m.decoder_parameter_count()) / m.encoder_parameter_count();
    INFO("ratio " << ratio);
    REQUIRE(ratio >= 0.2);
    REQUIRE(ratio <= 0.45);
  }
}

TEST_CASE("retrieval pass never runs the decoder", "[model]") {
  SanModel<float> m(ModelConfig::toy());
  m.init(3);
  const auto images = random_images(3, 64, 32, 5);
  m.reset_decoder_invocations();
  const auto r = m.forward(images, Pass::kRetrieval);
  REQUIRE(m.decoder_invocations() == 0);
  REQUIRE_FALSE(r.decoded.has_value());
  REQUIRE(r.embedding.shape() == Shape{3, 256, 1, 1});

  m.forward(images, Pass::kEval);
  REQUIRE(m.decoder_invocations() == 1);
}

TEST_CASE("embedding equals the pooled encoder output", "[model]") {
  SanModel<float> m(ModelConfig::toy());
  m.init(4);
  const auto images = random_images(2, 64, 32, 6);
  const auto r = m.forward(images, Pass::kEval);
  REQUIRE(r.embedding == SanModel<float>::pool(m.encode(images, nn::Mode::kEval)));
}

TEST_CASE("eval pass is deterministic", "[model]") {
  SanModel<float> m(ModelConfig::toy());
  m.init(5);
  const auto images = random_images(2, 64, 32, 7);
  const auto a = m.forward(images, Pass::kEval);
  const auto b = m.forward(images, Pass::kEval);
  REQUIRE(a.embedding == b.embedding);
  REQUIRE(a.decoded->texture == b.decoded->texture);
}

TEST_CASE("decoder config must reach the texture size", "[model]") {
  ModelConfig cfg = ModelConfig::toy();
  cfg.decoder.output_height = 60;
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  ModelConfig enc = ModelConfig::toy();
  enc.encoder.input_height = 66;
  REQUIRE_THROWS_AS(SanModel<float>(enc), ConfigError);
}

TEST_CASE("checkpoint round trip preserves outputs", "[model]") {
  const auto dir = test::scratch_dir("model_ckpt");
  ModelConfig cfg = ModelConfig::toy();
  cfg.num_classes = 7;
  SanModel<float> m(cfg);
  m.init(6);
  Checkpoint ck;
  ck.step = 12;
  ck.seed = 6;
  export_model(m, ck);
  save_checkpoint(dir / "m.ckpt", ck);
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  REQUIRE(back.step == 12);
  REQUIRE(back.tensors.size() == ck.tensors.size());

  SanModel<float> restored = model_from_checkpoint(back);
  const auto images = random_images(2, 64, 32, 8);
  const auto a = m.forward(images, Pass::kEval);
  const auto b = restored.forward(images, Pass::kEval);
  REQUIRE(a.embedding == b.embedding);
  REQUIRE(a.logits == b.logits);
  REQUIRE(a.decoded->texture == b.decoded->texture);

  save_checkpoint(dir / "again.ckpt", back);
  REQUIRE(test::slurp(dir / "m.ckpt") == test::slurp(dir / "again.ckpt"));
}

TEST_CASE("importing an incompatible checkpoint fails", "[model]") {
  SanModel<float> small(ModelConfig::toy());
  Checkpoint ck;
  export_model(small, ck);
  SanModel<float> big(ModelConfig::paper_scale());
  REQUIRE_THROWS_AS(import_model(big, ck), ConfigError);

  const auto dir = test::scratch_dir("model_bad_ckpt");
  {
    std::ofstream os(dir / "junk.ckpt", std::ios::binary);
    os << "not a checkpoint";
  }
  REQUIRE_THROWS(load_checkpoint(dir / "junk.ckpt"));
}
