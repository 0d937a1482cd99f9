// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <array>
#include <string>

#include "san/core/errors.hpp"

namespace san::model {

using json = nlohmann::ordered_json;

inline constexpr int kStageCount = 4;
inline constexpr int kDecoderBlocks = 4;
inline constexpr int kTapCount = 3;

struct EncoderConfig {
  int input_height = 64;
  int input_width = 32;
  int stem_width = 16;
  std::array<int, kStageCount> widths{32, 64, 128, 256};
  bool remove_last_stride = true;

  // Stem (strided conv + 2x2 max pool) downsamples by 4; stages 2 and 3 by 2
  // each; stage 4 by 2 unless its stride is removed.
  int stage_stride(int stage) const {
    constexpr std::array<int, kStageCount> base{1, 2, 2, 2};
    if (stage == kStageCount - 1 && remove_last_stride) return 1;
    return base[static_cast<std::size_t>(stage)];
  }
  int downsample() const {
    int d = 4;
    for (int s = 0; s < kStageCount; ++s) d *= stage_stride(s);
    return d;
  }
  int feature_height() const { return input_height / downsample(); }
  int feature_width() const { return input_width / downsample(); }
  int feature_channels() const { return widths.back(); }

  void validate() const {
    const int d = downsample();
    require_config(input_height > 0 && input_width > 0 && input_height % d == 0 && input_width % d == 0,
                   "input " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                       " not divisible by downsample factor " + std::to_string(d));
    require_config(stem_width > 0, "stem width must be positive");
    for (int w : widths) require_config(w > 0, "stage widths must be positive");
  }

  bool operator==(const EncoderConfig&) const = default;
};

struct DecoderConfig {
  int bridge_size = 4;
  int bridge_channels = 128;
  std::array<int, kDecoderBlocks> widths{128, 32, 16, 8};
  int output_height = 64;
  int output_width = 64;

  int tap_size(int block) const { return bridge_size << (block + 1); }

  void validate() const {
    require_config(bridge_size > 0 && bridge_channels > 0, "bridge size and channels must be positive");
    require_config(bridge_size * (1 << kDecoderBlocks) == output_height &&
                       bridge_size * (1 << kDecoderBlocks) == output_width,
                   "bridge " + std::to_string(bridge_size) + " cannot reach " + std::to_string(output_height) + "x" +
                       std::to_string(output_width) + " in 4 doublings");
    for (int w : widths) require_config(w > 0, "decoder widths must be positive");
  }

  bool operator==(const DecoderConfig&) const = default;
};

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
  bool with_decoder = true;
  int num_classes = 0;  // 0: no identity classifier

  static ModelConfig toy() { return ModelConfig{}; }

  static ModelConfig paper_scale() {
    ModelConfig c;
    c.encoder.input_height = 256;
    c.encoder.input_width = 128;
    c.decoder.bridge_size = 16;
    c.decoder.output_height = 256;
    c.decoder.output_width = 256;
    return c;
  }

  // Texture resolution `atlas` and image resolution `height` x `width`.
  static ModelConfig for_resolution(int height, int width, int atlas) {
    ModelConfig c;
    c.encoder.input_height = height;
    c.encoder.input_width = width;
    c.decoder.bridge_size = atlas / (1 << kDecoderBlocks);
    c.decoder.output_height = atlas;
    c.decoder.output_width = atlas;
    return c;
  }

  void validate() const {
    encoder.validate();
    if (with_decoder) decoder.validate();
    require_config(num_classes >= 0, "num_classes must be >= 0");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline void to_json(json& j, const EncoderConfig& c) {
  j = json{{"input_height", c.input_height}, {"input_width", c.input_width}, {"stem_width", c.stem_width},
           {"widths", c.widths},             {"remove_last_stride", c.remove_last_stride}};
}
inline void from_json(const json& j, EncoderConfig& c) {
  EncoderConfig d;
  c.input_height = j.value("input_height", d.input_height);
  c.input_width = j.value("input_width", d.input_width);
  c.stem_width = j.value("stem_width", d.stem_width);
  c.widths = j.value("widths", d.widths);
  c.remove_last_stride = j.value("remove_last_stride", d.remove_last_stride);
}
inline void to_json(json& j, const DecoderConfig& c) {
  j = json{{"bridge_size", c.bridge_size}, {"bridge_channels", c.bridge_channels}, {"widths", c.widths},
           {"output_height", c.output_height}, {"output_width", c.output_width}};
}
inline void from_json(const json& j, DecoderConfig& c) {
  DecoderConfig d;
  c.bridge_size = j.value("bridge_size", d.bridge_size);
  c.bridge_channels = j.value("bridge_channels", d.bridge_channels);
  c.widths = j.value("widths", d.widths);
  c.output_height = j.value("output_height", d.output_height);
  c.output_width = j.value("output_width", d.output_width);
}
inline void to_json(json& j, const ModelConfig& c) {
  j = json{{"encoder", c.encoder}, {"decoder", c.decoder}, {"with_decoder", c.with_decoder},
           {"num_classes", c.num_classes}};
}
inline void from_json(const json& j, ModelConfig& c) {
  c.encoder = j.value("encoder", EncoderConfig{});
  c.decoder = j.value("decoder", DecoderConfig{});
  c.with_decoder = j.value("with_decoder", true);
  c.num_classes = j.value("num_classes", 0);
}

}  // namespace san::model
