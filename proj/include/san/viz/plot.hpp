// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/image.hpp"
#include "san/training/trainer.hpp"

namespace san::viz {

namespace fs = std::filesystem;

inline constexpr Rgb kWhite{1.f, 1.f, 1.f};
inline constexpr Rgb kBlack{0.f, 0.f, 0.f};
inline constexpr Rgb kGrid{0.85f, 0.85f, 0.85f};

// Line colors, cycled by series index.
inline constexpr std::array<Rgb, 6> kPalette{{{0.12f, 0.47f, 0.71f},
                                              {0.84f, 0.15f, 0.16f},
                                              {0.17f, 0.63f, 0.17f},
                                              {1.00f, 0.50f, 0.05f},
                                              {0.58f, 0.40f, 0.74f},
                                              {0.55f, 0.34f, 0.29f}}};

class Canvas {
 public:
  Canvas(int height, int width, Rgb background = kWhite) : image_(height, width, background) {}

  const Image& image() const { return image_; }
  int height() const { return image_.height(); }
  int width() const { return image_.width(); }

  void dot(int y, int x, const Rgb& c) {
    if (y >= 0 && y < height() && x >= 0 && x < width()) image_.set(y, x, c);
  }

  void fill_rect(int y0, int x0, int h, int w, const Rgb& c) {
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) dot(y, x, c);
  }

  void frame(int y0, int x0, int h, int w, const Rgb& c) {
    line(y0, x0, y0, x0 + w - 1, c);
    line(y0 + h - 1, x0, y0 + h - 1, x0 + w - 1, c);
    line(y0, x0, y0 + h - 1, x0, c);
    line(y0, x0 + w - 1, y0 + h - 1, x0 + w - 1, c);
  }

  // Bresenham.
  void line(int y0, int x0, int y1, int x1, const Rgb& c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      dot(y0, x0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void blit(const Image& src, int y0, int x0) {
    for (int y = 0; y < src.height(); ++y)
      for (int x = 0; x < src.width(); ++x) dot(y0 + y, x0 + x, src.pixel(y, x));
  }

  // 3x5 glyphs for digits, '.', '-', 'e' and '+'; other characters are skipped.
  void text(int y0, int x0, const std::string& s, const Rgb& c, int scale = 2) {
    int x = x0;
    for (char ch : s) {
      const auto* g = glyph(ch);
      if (g) {
        for (int r = 0; r < 5; ++r)
          for (int col = 0; col < 3; ++col)
            if ((*g)[static_cast<std::size_t>(r)] & (4 >> col)) fill_rect(y0 + r * scale, x + col * scale, scale, scale, c);
      }
      x += 4 * scale;
    }
  }

  static int text_width(const std::string& s, int scale = 2) { return static_cast<int>(s.size()) * 4 * scale; }

 private:
  static const std::array<std::uint8_t, 5>* glyph(char ch) {
    static const std::array<std::array<std::uint8_t, 5>, 10> digits{{{7, 5, 5, 5, 7},
                                                                      {2, 6, 2, 2, 7},
                                                                      {7, 1, 7, 4, 7},
                                                                      {7, 1, 3, 1, 7},
                                                                      {5, 5, 7, 1, 1},
                                                                      {7, 4, 7, 1, 7},
                                                                      {7, 4, 7, 5, 7},
                                                                      {7, 1, 1, 2, 2},
                                                                      {7, 5, 7, 5, 7},
                                                                      {7, 5, 7, 1, 7}}};
    static const std::array<std::uint8_t, 5> dot_glyph{0, 0, 0, 0, 2};
    static const std::array<std::uint8_t, 5> minus{0, 0, 7, 0, 0};
    static const std::array<std::uint8_t, 5> plus{0, 2, 7, 2, 0};
    static const std::array<std::uint8_t, 5> e{0, 7, 7, 4, 7};
    if (ch >= '0' && ch <= '9') return &digits[static_cast<std::size_t>(ch - '0')];
    if (ch == '.') return &dot_glyph;
    if (ch == '-') return &minus;
    if (ch == '+') return &plus;
    if (ch == 'e') return &e;
    return nullptr;
  }

  Image image_;
};

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::vector<Series> series;
  std::optional<double> y_min;
  std::optional<double> y_max;
};

// Draws one framed plot into the rectangle (top, left, h, w) with min/max labels on the y axis.
inline void draw_panel(Canvas& canvas, const Panel& panel, int top, int left, int h, int w) {
  constexpr int kMargin = 56;
  const int px = left + kMargin, py = top + 8, pw = w - kMargin - 8, ph = h - 28;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : panel.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (panel.y_min) ymin = *panel.y_min;
  if (panel.y_max) ymax = *panel.y_max;
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  for (int k = 1; k < 4; ++k) canvas.line(py + k * ph / 4, px, py + k * ph / 4, px + pw - 1, kGrid);
  canvas.frame(py, px, ph, pw, kBlack);
  canvas.text(py, left + 2, format_number(ymax), kBlack);
  canvas.text(py + ph - 10, left + 2, format_number(ymin), kBlack);
  canvas.text(py + ph + 6, px, format_number(xmin), kBlack);
  const std::string xm = format_number(xmax);
  canvas.text(py + ph + 6, px + pw - Canvas::text_width(xm), xm, kBlack);
  auto to_px = [&](double x, double y) {
    const int cx = px + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (pw - 1)));
    const double t = std::clamp((y - ymin) / (ymax - ymin), 0.0, 1.0);
    const int cy = py + ph - 1 - static_cast<int>(std::lround(t * (ph - 1)));
    return std::pair{cy, cx};
  };
  for (std::size_t si = 0; si < panel.series.size(); ++si) {
    const auto& s = panel.series[si];
    const Rgb& color = kPalette[si % kPalette.size()];
    std::optional<std::pair<int, int>> prev;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) {
        prev.reset();
        continue;
      }
      const auto p = to_px(s.x[i], s.y[i]);
      if (prev) canvas.line(prev->first, prev->second, p.first, p.second, color);
      else canvas.dot(p.first, p.second, color);
      prev = p;
    }
  }
}

inline constexpr std::array<const char*, 5> kLossPanels{"l_id", "l_tri", "l_rec", "l_tr", "total"};

// One stacked panel per loss component; reID steps in the first palette color, synthetic steps in the second.
inline Image loss_curves(const std::vector<training::LossLogLine>& log, int width = 640, int panel_height = 140) {
  require_input(!log.empty(), "loss_curves: empty loss log");
  Canvas canvas(panel_height * static_cast<int>(kLossPanels.size()), width);
  for (std::size_t p = 0; p < kLossPanels.size(); ++p) {
    Panel panel;
    panel.series = {Series{"reid", {}, {}}, Series{"synthetic", {}, {}}};
    for (const auto& l : log) {
      const auto& c = l.report.components;
      const double v = p == 0 ? c.id : p == 1 ? c.triplet : p == 2 ? c.rec : p == 3 ? c.tr : l.report.total;
      auto& s = panel.series[l.kind == training::BatchKind::kReid ? 0 : 1];
      s.x.push_back(l.step);
      s.y.push_back(v);
    }
    draw_panel(canvas, panel, static_cast<int>(p) * panel_height, 0, panel_height, width);
  }
  return canvas.image();
}

// CMC@k against k for each named curve, y fixed to [0, 1].
inline Image cmc_plot(const std::vector<std::pair<std::string, std::vector<double>>>& curves, int height = 320,
                      int width = 480) {
  require_input(!curves.empty(), "cmc_plot: no curves");
  Canvas canvas(height, width);
  Panel panel;
  panel.y_min = 0.0;
  panel.y_max = 1.0;
  for (const auto& [name, curve] : curves) {
    Series s{name, {}, {}};
    for (std::size_t k = 0; k < curve.size(); ++k) {
      s.x.push_back(static_cast<double>(k + 1));
      s.y.push_back(curve[k]);
    }
    panel.series.push_back(std::move(s));
  }
  draw_panel(canvas, panel, 0, 0, height, width);
  return canvas.image();
}

struct GridRow {
  Image input;
  Image predicted;
  std::optional<Image> groundtruth;
};

// One row per sample: input image (scaled to the texture height), predicted texture, groundtruth texture.
inline Image texture_grid(const std::vector<GridRow>& rows, int pad = 4) {
  require_input(!rows.empty(), "texture_grid: no rows");
  const int th = rows.front().predicted.height(), tw = rows.front().predicted.width();
  const int ih = th;
  const int iw = std::max(1, static_cast<int>(std::lround(static_cast<double>(rows.front().input.width()) * th /
                                                          rows.front().input.height())));
  const int width = pad + iw + pad + tw + pad + tw + pad;
  const int height = pad + static_cast<int>(rows.size()) * (th + pad);
  Canvas canvas(height, width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    require_input(row.predicted.height() == th && row.predicted.width() == tw, "texture_grid: mixed texture sizes");
    const int y = pad + static_cast<int>(r) * (th + pad);
    canvas.blit(resize_bilinear(row.input, ih, iw), y, pad);
    canvas.blit(row.predicted, y, pad + iw + pad);
    if (row.groundtruth) canvas.blit(resize_bilinear(*row.groundtruth, th, tw), y, pad + iw + pad + tw + pad);
    else canvas.fill_rect(y, pad + iw + pad + tw + pad, th, tw, kGrid);
  }
  return canvas.image();
}

}  // namespace san::viz
