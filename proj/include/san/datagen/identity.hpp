// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "san/core/errors.hpp"
#include "san/core/image.hpp"
#include "san/core/random.hpp"
#include "san/datagen/atlas.hpp"

namespace san::datagen {

enum class PatternKind : int { kSolid = 0, kHorizontalStripes, kVerticalStripes, kChecker, kDots };
inline constexpr int kPatternKindCount = 5;

struct CellAppearance {
  Rgb base{};
  Rgb accent{};
  PatternKind pattern = PatternKind::kSolid;
  float phase = 0.f;   // pattern offset, in 64-pixel atlas units
  float period = 4.f;  // pattern period, in 64-pixel atlas units
};

struct IdentitySpec {
  int id = 0;
  std::uint64_t seed = 0;
  std::array<CellAppearance, kCellCount> cells{};

  CellAppearance& cell(Cell c) { return cells[static_cast<std::size_t>(c)]; }
  const CellAppearance& cell(Cell c) const { return cells[static_cast<std::size_t>(c)]; }
};

inline constexpr Rgb kNeutralColor = {0.5f, 0.5f, 0.5f};

namespace detail {

inline Rgb hsv(double h, double s, double v) {
  h = std::fmod(h, 1.0) * 6.0;
  const int i = static_cast<int>(h);
  const double f = h - i;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r = v, g = t, b = p;
  switch (i % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

inline Rgb garment_color(Rng& rng) {
  return hsv(uniform(rng, 0, 1), uniform(rng, 0.25, 0.9), uniform(rng, 0.25, 0.95));
}

inline Rgb jitter(Rng& rng, Rgb c, double amount) {
  for (float& v : c) v = static_cast<float>(std::clamp(v + uniform(rng, -amount, amount), 0.0, 1.0));
  return c;
}

inline PatternKind any_pattern(Rng& rng) {
  return static_cast<PatternKind>(uniform_int(rng, 0, kPatternKindCount - 1));
}

}  // namespace detail

// Appearance is drawn per garment (shirt, trousers, skin, hair) and spread
// over the cells that garment covers, so unseen cells stay partly predictable
// from seen ones.
inline IdentitySpec make_identity_spec(int id, std::uint64_t seed) {
  require_config(id >= 0, "identity id must be >= 0, got " + std::to_string(id));
  Rng rng(derive_seed(seed, {0x1d, static_cast<std::uint64_t>(id)}));
  IdentitySpec spec;
  spec.id = id;
  spec.seed = seed;

  const Rgb shirt = detail::garment_color(rng);
  const Rgb shirt_accent = detail::garment_color(rng);
  const Rgb trousers = detail::garment_color(rng);
  const Rgb trousers_accent = detail::garment_color(rng);
  const Rgb skin = detail::hsv(uniform(rng, 0.02, 0.1), uniform(rng, 0.3, 0.6), uniform(rng, 0.45, 0.95));
  const Rgb hair = detail::hsv(uniform(rng, 0.0, 0.15), uniform(rng, 0.2, 0.8), uniform(rng, 0.05, 0.6));

  auto make = [&](Rgb base, Rgb accent, PatternKind kind) {
    CellAppearance a;
    a.base = detail::jitter(rng, base, 0.03);
    a.accent = detail::jitter(rng, accent, 0.03);
    a.pattern = kind;
    a.phase = static_cast<float>(uniform(rng, 0.0, 8.0));
    a.period = static_cast<float>(uniform(rng, 3.0, 8.0));
    return a;
  };

  const PatternKind front = detail::any_pattern(rng);
  const PatternKind back = uniform(rng, 0, 1) < 0.5 ? front : detail::any_pattern(rng);
  const PatternKind sleeves = uniform(rng, 0, 1) < 0.5 ? PatternKind::kSolid : front;
  const PatternKind legs =
      uniform(rng, 0, 1) < 0.6 ? PatternKind::kSolid : PatternKind::kVerticalStripes;

  spec.cell(Cell::kHeadFront) = make(skin, hair, PatternKind::kSolid);
  spec.cell(Cell::kHeadBack) = make(hair, skin, PatternKind::kSolid);
  spec.cell(Cell::kTorsoFront) = make(shirt, shirt_accent, front);
  spec.cell(Cell::kTorsoBack) = make(shirt, shirt_accent, back);
  spec.cell(Cell::kLeftArm) = make(shirt, shirt_accent, sleeves);
  spec.cell(Cell::kRightArm) = make(shirt, shirt_accent, sleeves);
  spec.cell(Cell::kLeftLeg) = make(trousers, trousers_accent, legs);
  spec.cell(Cell::kRightLeg) = make(trousers, trousers_accent, legs);
  return spec;
}

// Colour of a cell at cell-local coordinates (u, v), measured in 64-pixel atlas units.
inline Rgb shade_cell(const CellAppearance& a, double u, double v) {
  const double p = a.period;
  switch (a.pattern) {
    case PatternKind::kSolid:
      return a.base;
    case PatternKind::kHorizontalStripes:
      return std::fmod((v + a.phase) / p, 2.0) < 1.0 ? a.base : a.accent;
    case PatternKind::kVerticalStripes:
      return std::fmod((u + a.phase) / p, 2.0) < 1.0 ? a.base : a.accent;
    case PatternKind::kChecker: {
      const auto iu = static_cast<long>(std::floor((u + a.phase) / p));
      const auto iv = static_cast<long>(std::floor((v + a.phase) / p));
      return ((iu + iv) & 1) == 0 ? a.base : a.accent;
    }
    case PatternKind::kDots: {
      const double fu = std::fmod(u + a.phase, p) - p / 2;
      const double fv = std::fmod(v + a.phase, p) - p / 2;
      return std::hypot(fu, fv) < 0.3 * p ? a.accent : a.base;
    }
  }
  throw ConfigError("unknown pattern kind " + std::to_string(static_cast<int>(a.pattern)));
}

inline Image make_identity_texture(const IdentitySpec& spec, const UVAtlasLayout& layout) {
  for (const auto& a : spec.cells) {
    const int k = static_cast<int>(a.pattern);
    require_config(k >= 0 && k < kPatternKindCount, "unknown pattern kind " + std::to_string(k));
    require_config(a.period > 0.f, "pattern period must be positive");
  }
  const int size = layout.size();
  const double unit = 64.0 / size;
  Image tex(size, size, kNeutralColor);
  for (int k = 0; k < kCellCount; ++k) {
    const PixelRect& r = layout.rects()[static_cast<std::size_t>(k)];
    const CellAppearance& a = spec.cells[static_cast<std::size_t>(k)];
    for (int y = r.y0; y < r.y1; ++y)
      for (int x = r.x0; x < r.x1; ++x)
        tex.set(y, x, shade_cell(a, (x - r.x0 + 0.5) * unit, (y - r.y0 + 0.5) * unit));
  }
  return tex;
}

}  // namespace san::datagen
