// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/tensor.hpp"

namespace san {

using Rgb = std::array<float, 3>;

// Interleaved H x W x 3 raster with channel values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, Rgb fill = {0.f, 0.f, 0.f})
      : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width * 3) {
    for (std::size_t k = 0; k < data_.size(); k += 3) {
      data_[k] = fill[0];
      data_[k + 1] = fill[1];
      data_[k + 2] = fill[2];
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int ch) { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + ch]; }
  float at(int y, int x, int ch) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + ch];
  }
  Rgb pixel(int y, int x) const { return {at(y, x, 0), at(y, x, 1), at(y, x, 2)}; }
  void set(int y, int x, const Rgb& c) {
    at(y, x, 0) = c[0];
    at(y, x, 1) = c[1];
    at(y, x, 2) = c[2];
  }

  std::span<const float> values() const { return data_; }
  std::span<float> values() { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

inline std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
}

// Rounds every channel to the 8-bit grid, i.e. what a save/load round trip yields.
inline Image quantize(const Image& img) {
  Image out = img;
  for (float& v : out.values()) v = static_cast<float>(to_byte(v)) / 255.f;
  return out;
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  std::vector<std::uint8_t> bytes(img.values().size());
  std::transform(img.values().begin(), img.values().end(), bytes.begin(), to_byte);

  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width());
  desc.height = static_cast<png_uint_32>(img.height());
  desc.format = PNG_FORMAT_RGB;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&desc, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw DataError("cannot write png " + path.string() + ": " + desc.message);
  }
}

inline Image read_png(const std::filesystem::path& path) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&desc, path.c_str())) {
    throw DataError("cannot read png " + path.string() + ": " + desc.message);
  }
  desc.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&desc);
    throw DataError("cannot decode png " + path.string() + ": " + desc.message);
  }
  Image img(static_cast<int>(desc.height), static_cast<int>(desc.width));
  auto vals = img.values();
  for (std::size_t k = 0; k < bytes.size(); ++k) vals[k] = static_cast<float>(bytes[k]) / 255.f;
  return img;
}

// Writes image `img` into sample `index` of an N x 3 x H x W tensor.
template <typename T>
void image_to_tensor(const Image& img, Tensor<T>& out, int index) {
  require_input(out.c() == 3 && out.h() == img.height() && out.w() == img.width(),
                "image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                    " does not fit tensor " + out.shape().str());
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) out.at(index, ch, y, x) = static_cast<T>(img.at(y, x, ch));
}

template <typename T>
Image tensor_to_image(const Tensor<T>& t, int index) {
  require_input(t.c() == 3, "tensor_to_image expects 3 channels, got " + t.shape().str());
  Image img(t.h(), t.w());
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < t.h(); ++y)
      for (int x = 0; x < t.w(); ++x) img.at(y, x, ch) = static_cast<float>(t.at(index, ch, y, x));
  return img;
}

// Bilinear resample (pixel-center aligned).
inline Image resize_bilinear(const Image& src, int height, int width) {
  Image out(height, width);
  const float sy = static_cast<float>(src.height()) / height;
  const float sx = static_cast<float>(src.width()) / width;
  for (int y = 0; y < height; ++y) {
    float fy = std::max(0.f, (y + 0.5f) * sy - 0.5f);
    int y0 = std::min(static_cast<int>(fy), src.height() - 1);
    int y1 = std::min(y0 + 1, src.height() - 1);
    float ly = fy - y0;
    for (int x = 0; x < width; ++x) {
      float fx = std::max(0.f, (x + 0.5f) * sx - 0.5f);
      int x0 = std::min(static_cast<int>(fx), src.width() - 1);
      int x1 = std::min(x0 + 1, src.width() - 1);
      float lx = fx - x0;
      for (int ch = 0; ch < 3; ++ch) {
        float top = src.at(y0, x0, ch) * (1 - lx) + src.at(y0, x1, ch) * lx;
        float bot = src.at(y1, x0, ch) * (1 - lx) + src.at(y1, x1, ch) * lx;
        out.at(y, x, ch) = top * (1 - ly) + bot * ly;
      }
    }
  }
  return out;
}

}  // namespace san
