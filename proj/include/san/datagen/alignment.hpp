// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "san/datagen/dataset.hpp"

namespace san::datagen {

struct AlignmentReport {
  int identities = 0;
  int samples = 0;
  int geometry_violations = 0;  // texture pixels off the shared cell layout
  int view_violations = 0;      // views not explained by their identity's single texture
  std::vector<std::string> issues;

  bool passed() const { return geometry_violations == 0 && view_violations == 0; }
};

// Audits a generated dataset on disk.
//
// Geometry: every identity texture has the atlas size, is neutral wherever the shared
// layout has no cell, and matches the texture regenerated from the identity alone.
// View independence: all views of an identity reference one texture file, and every
// stored image is reproduced bit-exactly by rendering that texture with the view's seed.
inline AlignmentReport check_alignment(const DatasetManifest& m, std::size_t max_issues = 20) {
  AlignmentReport rep;
  const DatasetConfig& cfg = m.config;
  const UVAtlasLayout layout(cfg.atlas_size);
  const Image neutral = quantize(Image(1, 1, kNeutralColor));
  auto note = [&](int& counter, const std::string& what) {
    ++counter;
    if (rep.issues.size() < max_issues) rep.issues.push_back(what);
  };

  std::map<int, std::string> texture_of;
  std::map<int, Image> source_of;
  for (const auto& r : m.records) {
    auto [it, fresh] = texture_of.emplace(r.identity, r.texture_path);
    if (!fresh && it->second != r.texture_path)
      note(rep.view_violations, r.sample_id + " references " + r.texture_path + " instead of " + it->second);
  }
  rep.identities = static_cast<int>(texture_of.size());

  for (const auto& [id, path] : texture_of) {
    const std::string who = "identity " + std::to_string(id);
    const Image stored = read_png(m.root / path);
    if (stored.height() != cfg.atlas_size || stored.width() != cfg.atlas_size) {
      note(rep.geometry_violations, who + " texture has the wrong size");
      continue;
    }
    int off_layout = 0;
    for (int y = 0; y < cfg.atlas_size; ++y)
      for (int x = 0; x < cfg.atlas_size; ++x)
        if (!layout.cell_at(y, x) && stored.pixel(y, x) != neutral.pixel(0, 0)) ++off_layout;
    if (off_layout > 0)
      note(rep.geometry_violations, who + ": " + std::to_string(off_layout) + " painted pixels outside the layout");
    Image source = make_identity_texture(make_identity_spec(id, cfg.seed), layout);
    if (quantize(source) != stored) note(rep.geometry_violations, who + " texture differs from its regeneration");
    source_of.emplace(id, std::move(source));
  }

  for (const auto& r : m.records) {
    ++rep.samples;
    auto src = source_of.find(r.identity);
    if (src == source_of.end()) continue;
    const GeneratedSample s = generate_sample(cfg, layout, src->second, r.identity, r.view, r.split);
    if (quantize(s.person) != read_png(m.root / r.image_path))
      note(rep.view_violations, r.sample_id + " is not a rendering of texture " + r.texture_path);
  }
  return rep;
}

}  // namespace san::datagen
