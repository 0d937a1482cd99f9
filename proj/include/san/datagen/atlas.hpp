// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string_view>

#include "san/core/errors.hpp"

namespace san::datagen {

// Semantic cells of the canonical texture atlas. A given atlas pixel belongs
// to the same cell for every identity.
enum class Cell : int {
  kHeadFront = 0,
  kHeadBack,
  kTorsoFront,
  kTorsoBack,
  kLeftArm,
  kRightArm,
  kLeftLeg,
  kRightLeg,
};
inline constexpr int kCellCount = 8;

inline constexpr std::array<std::string_view, kCellCount> kCellNames = {
    "head-front", "head-back", "torso-front", "torso-back",
    "left-arm",   "right-arm", "left-leg",    "right-leg"};

struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  int area() const { return width() * height(); }
  bool contains(int y, int x) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool overlaps(const PixelRect& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
  bool operator==(const PixelRect&) const = default;
};

class UVAtlasLayout {
 public:
  static constexpr int kGridUnits = 16;

  // Cells on a 16 x 16 unit grid; every cell loses a gutter on its right and
  // bottom edges so that neutral pixels separate neighbouring cells.
  explicit UVAtlasLayout(int size = 64) : size_(size) {
    require_config(size >= 32 && size % kGridUnits == 0,
                   "atlas size must be a multiple of 16 and >= 32, got " + std::to_string(size));
    constexpr std::array<std::array<int, 4>, kCellCount> units = {{
        {0, 0, 8, 4},      // head-front
        {8, 0, 16, 4},     // head-back
        {0, 4, 8, 10},     // torso-front
        {8, 4, 16, 10},    // torso-back
        {0, 10, 4, 16},    // left-arm
        {4, 10, 8, 16},    // right-arm
        {8, 10, 12, 16},   // left-leg
        {12, 10, 16, 16},  // right-leg
    }};
    const int px = size / kGridUnits;
    const int gutter = std::max(1, size / 64);
    for (int k = 0; k < kCellCount; ++k) {
      const auto& u = units[static_cast<std::size_t>(k)];
      cells_[static_cast<std::size_t>(k)] =
          PixelRect{u[0] * px, u[1] * px, u[2] * px - gutter, u[3] * px - gutter};
    }
  }

  int size() const { return size_; }
  const PixelRect& rect(Cell c) const { return cells_[static_cast<std::size_t>(c)]; }
  const std::array<PixelRect, kCellCount>& rects() const { return cells_; }

  std::optional<Cell> cell_at(int y, int x) const {
    for (int k = 0; k < kCellCount; ++k)
      if (cells_[static_cast<std::size_t>(k)].contains(y, x)) return static_cast<Cell>(k);
    return std::nullopt;
  }

  int cell_pixel_count() const {
    int total = 0;
    for (const auto& r : cells_) total += r.area();
    return total;
  }

  double coverage() const {
    return static_cast<double>(cell_pixel_count()) / (static_cast<double>(size_) * size_);
  }

  bool operator==(const UVAtlasLayout&) const = default;

 private:
  int size_;
  std::array<PixelRect, kCellCount> cells_{};
};

}  // namespace san::datagen
