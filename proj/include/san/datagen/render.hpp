// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/image.hpp"
#include "san/core/random.hpp"
#include "san/datagen/atlas.hpp"
#include "san/datagen/identity.hpp"

namespace san::datagen {

inline constexpr double kMinVisibleFraction = 0.3;
inline constexpr double kMaxVisibleFraction = 0.9;

// Rectangle in normalised image coordinates (u across the width, v down the height).
struct UnitRect {
  double u0 = 0, v0 = 0, u1 = 0, v1 = 0;
  bool contains(double u, double v) const { return u >= u0 && u < u1 && v >= v0 && v < v1; }
};

struct Occluder {
  UnitRect rect;
  Rgb color{};
};

struct ViewSpec {
  bool facing_back = false;
  std::array<bool, kCellCount> visible_cells{true, true, true, true, true, true, true, true};
  double rotation_deg = 0.0;  // [-25, 25]
  double scale = 1.0;         // [0.7, 1.3]
  double shift_u = 0.0;       // translation as a fraction of the image width
  double shift_v = 0.0;       // translation as a fraction of the image height
  std::vector<Occluder> occluders;
  int background_id = 0;
  int height = 64;
  int width = 32;
};

struct RenderResult {
  Image person;
  Image backdrop;                    // background with occluders painted in
  std::vector<std::uint8_t> mask;    // atlas-sized; 1 where the atlas pixel was rendered
  std::vector<std::uint8_t> footprint;  // image-sized; 1 where the person was composited
  double visible_fraction = 0.0;
};

class ViewRejected : public InputError {
 public:
  using InputError::InputError;
};

// Body slots of the 2D person template, in normalised image coordinates.
enum class Slot : int { kHead = 0, kTorso, kImageLeftArm, kImageRightArm, kImageLeftLeg, kImageRightLeg };
inline constexpr int kSlotCount = 6;

inline constexpr std::array<UnitRect, kSlotCount> kBodyTemplate = {{
    {0.35, 0.03, 0.65, 0.17},
    {0.28, 0.18, 0.72, 0.52},
    {0.08, 0.18, 0.27, 0.55},
    {0.73, 0.18, 0.92, 0.55},
    {0.29, 0.53, 0.49, 0.97},
    {0.51, 0.53, 0.71, 0.97},
}};

// Which atlas cell each slot shows. Facing the camera, the person's right side
// is on the image left; from behind it is the other way round.
inline Cell slot_cell(Slot slot, bool facing_back) {
  switch (slot) {
    case Slot::kHead: return facing_back ? Cell::kHeadBack : Cell::kHeadFront;
    case Slot::kTorso: return facing_back ? Cell::kTorsoBack : Cell::kTorsoFront;
    case Slot::kImageLeftArm: return facing_back ? Cell::kLeftArm : Cell::kRightArm;
    case Slot::kImageRightArm: return facing_back ? Cell::kRightArm : Cell::kLeftArm;
    case Slot::kImageLeftLeg: return facing_back ? Cell::kLeftLeg : Cell::kRightLeg;
    case Slot::kImageRightLeg: return facing_back ? Cell::kRightLeg : Cell::kLeftLeg;
  }
  return Cell::kTorsoFront;
}

inline void validate_view(const ViewSpec& v) {
  require_config(v.height > 0 && v.width > 0, "view resolution must be positive");
  require_config(std::abs(v.rotation_deg) <= 25.0 + 1e-9, "rotation outside [-25, 25] degrees");
  require_config(v.scale >= 0.7 - 1e-9 && v.scale <= 1.3 + 1e-9, "scale outside [0.7, 1.3]");
}

inline Image make_background(int background_id, int height, int width) {
  Rng rng(derive_seed(0xb9, {static_cast<std::uint64_t>(background_id)}));
  const Rgb a = detail::garment_color(rng);
  const Rgb b = detail::garment_color(rng);
  const double angle = uniform(rng, 0, 2 * std::numbers::pi);
  const double du = std::cos(angle), dv = std::sin(angle);
  constexpr int kGrid = 5;
  std::array<double, kGrid * kGrid> noise{};
  for (double& n : noise) n = uniform(rng, -0.18, 0.18);
  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width, v = (y + 0.5) / height;
      const double t = std::clamp(0.5 + 0.7 * ((u - 0.5) * du + (v - 0.5) * dv), 0.0, 1.0);
      const double gu = u * (kGrid - 1), gv = v * (kGrid - 1);
      const int iu = std::min(static_cast<int>(gu), kGrid - 2), iv = std::min(static_cast<int>(gv), kGrid - 2);
      const double fu = gu - iu, fv = gv - iv;
      const double n = noise[iv * kGrid + iu] * (1 - fu) * (1 - fv) + noise[iv * kGrid + iu + 1] * fu * (1 - fv) +
                       noise[(iv + 1) * kGrid + iu] * (1 - fu) * fv + noise[(iv + 1) * kGrid + iu + 1] * fu * fv;
      for (int ch = 0; ch < 3; ++ch) {
        const double c = a[ch] * (1 - t) + b[ch] * t + n;
        img.at(y, x, ch) = static_cast<float>(std::clamp(c, 0.0, 1.0));
      }
    }
  }
  return img;
}

// Warps the visible template slots into the image, sampling the atlas with
// nearest lookup on an s x s subpixel grid and box-filtering the result.
inline RenderResult render_view(const Image& texture, const UVAtlasLayout& layout, const ViewSpec& view,
                                const Image& background, int supersample = 3) {
  validate_view(view);
  require_input(texture.height() == layout.size() && texture.width() == layout.size(),
                "texture does not match atlas layout size " + std::to_string(layout.size()));
  require_input(background.height() == view.height && background.width() == view.width,
                "background does not match view resolution");

  RenderResult out;
  out.backdrop = background;
  const int H = view.height, W = view.width;
  for (const auto& occ : view.occluders) {
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (occ.rect.contains((x + 0.5) / W, (y + 0.5) / H)) out.backdrop.set(y, x, occ.color);
  }
  out.person = out.backdrop;
  out.mask.assign(static_cast<std::size_t>(layout.size()) * layout.size(), 0);
  out.footprint.assign(static_cast<std::size_t>(H) * W, 0);

  const double theta = view.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cx = W / 2.0, cy = H / 2.0;
  const double tx = view.shift_u * W, ty = view.shift_v * H;
  const int s = supersample;
  const double inv_samples = 1.0 / (s * s);

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc[3] = {0, 0, 0};
      int covered = 0;
      for (int sy = 0; sy < s; ++sy) {
        for (int sx = 0; sx < s; ++sx) {
          const double px = x + (sx + 0.5) / s, py = y + (sy + 0.5) / s;
          bool occluded = false;
          for (const auto& occ : view.occluders) occluded |= occ.rect.contains(px / W, py / H);
          if (occluded) continue;
          // Inverse of: p = R * scale * (q - c) + c + t.
          const double dx = (px - cx - tx) / view.scale, dy = (py - cy - ty) / view.scale;
          const double qx = cs * dx + sn * dy + cx, qy = -sn * dx + cs * dy + cy;
          const double u = qx / W, v = qy / H;
          for (int k = 0; k < kSlotCount; ++k) {
            const UnitRect& slot = kBodyTemplate[static_cast<std::size_t>(k)];
            if (!slot.contains(u, v)) continue;
            const Cell cell = slot_cell(static_cast<Slot>(k), view.facing_back);
            if (!view.visible_cells[static_cast<std::size_t>(cell)]) break;
            double fu = (u - slot.u0) / (slot.u1 - slot.u0);
            const double fv = (v - slot.v0) / (slot.v1 - slot.v0);
            if (view.facing_back) fu = 1.0 - fu;
            const PixelRect& r = layout.rect(cell);
            const int ax = std::clamp(r.x0 + static_cast<int>(fu * r.width()), r.x0, r.x1 - 1);
            const int ay = std::clamp(r.y0 + static_cast<int>(fv * r.height()), r.y0, r.y1 - 1);
            for (int ch = 0; ch < 3; ++ch) acc[ch] += texture.at(ay, ax, ch);
            out.mask[static_cast<std::size_t>(ay) * layout.size() + ax] = 1;
            ++covered;
            break;
          }
        }
      }
      if (covered == 0) continue;
      out.footprint[static_cast<std::size_t>(y) * W + x] = 1;
      const double bg_weight = 1.0 - covered * inv_samples;
      for (int ch = 0; ch < 3; ++ch) {
        out.person.at(y, x, ch) =
            static_cast<float>(out.backdrop.at(y, x, ch) * bg_weight + acc[ch] * inv_samples);
      }
    }
  }

  std::size_t marked = 0;
  for (auto m : out.mask) marked += m;
  out.visible_fraction = static_cast<double>(marked) / layout.cell_pixel_count();
  if (out.visible_fraction < kMinVisibleFraction || out.visible_fraction > kMaxVisibleFraction) {
    throw ViewRejected("visible fraction " + std::to_string(out.visible_fraction) + " outside [0.3, 0.9]");
  }
  return out;
}

inline ViewSpec sample_view(Rng& rng, int height, int width) {
  ViewSpec v;
  v.height = height;
  v.width = width;
  v.facing_back = uniform(rng, 0, 1) < 0.5;
  for (int k = 0; k < kCellCount; ++k) {
    const auto c = static_cast<Cell>(k);
    const bool torso = c == Cell::kTorsoFront || c == Cell::kTorsoBack;
    v.visible_cells[static_cast<std::size_t>(k)] = torso || uniform(rng, 0, 1) >= 0.15;
  }
  v.rotation_deg = uniform(rng, -25.0, 25.0);
  v.scale = uniform(rng, 0.7, 1.3);
  v.shift_u = uniform(rng, -0.1, 0.1);
  v.shift_v = uniform(rng, -0.08, 0.08);
  const double r = uniform(rng, 0, 1);
  const int occluders = r < 0.5 ? 0 : (r < 0.8 ? 1 : 2);
  for (int i = 0; i < occluders; ++i) {
    Occluder o;
    const double w = uniform(rng, 0.3, 1.0), h = uniform(rng, 0.1, 0.3);
    o.rect.u0 = uniform(rng, -0.2, 1.0 - w + 0.2);
    o.rect.v0 = uniform(rng, 0.1, 1.0 - h);
    o.rect.u1 = o.rect.u0 + w;
    o.rect.v1 = o.rect.v0 + h;
    o.color = detail::garment_color(rng);
    v.occluders.push_back(o);
  }
  v.background_id = uniform_int(rng, 0, 999);
  return v;
}

struct RenderedView {
  ViewSpec view;
  RenderResult result;
  int attempts = 0;
};

// Draws views until one passes the visible-fraction bounds.
inline RenderedView sample_and_render(Rng& rng, const Image& texture, const UVAtlasLayout& layout,
                                      int height, int width, int max_attempts = 200) {
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    ViewSpec view = sample_view(rng, height, width);
    const Image bg = make_background(view.background_id, height, width);
    try {
      RenderResult res = render_view(texture, layout, view, bg);
      return {std::move(view), std::move(res), attempt};
    } catch (const ViewRejected&) {
    }
  }
  throw DataError("no acceptable view after " + std::to_string(max_attempts) + " attempts");
}

}  // namespace san::datagen
