// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/image.hpp"
#include "san/core/random.hpp"
#include "san/core/tensor.hpp"
#include "san/datagen/atlas.hpp"
#include "san/datagen/identity.hpp"
#include "san/datagen/render.hpp"
#include "san/version.hpp"

namespace san::datagen {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kManifestSchemaVersion = 1;

enum class Split { kTrain, kQuery, kGallery };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kQuery: return "query";
    case Split::kGallery: return "gallery";
  }
  return "train";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "query") return Split::kQuery;
  if (s == "gallery") return Split::kGallery;
  throw DataError("unknown split '" + s + "'");
}

struct DatasetConfig {
  int train_ids = 50;
  int train_views = 12;
  int test_ids = 20;
  int test_views = 6;
  int query_views = 2;  // first views of each test identity go to the query split
  int image_height = 64;
  int image_width = 32;
  int atlas_size = 64;
  std::uint64_t seed = 7;

  static DatasetConfig paper_scale() {
    DatasetConfig c;
    c.image_height = 256;
    c.image_width = 128;
    c.atlas_size = 256;
    return c;
  }

  void validate() const {
    require_config(train_ids >= 2, "need at least 2 training identities, got " + std::to_string(train_ids));
    require_config(train_views >= 1, "train_views must be >= 1");
    require_config(test_ids >= 0, "test_ids must be >= 0");
    if (test_ids > 0) {
      require_config(query_views >= 1 && query_views < test_views,
                     "query_views must be in [1, test_views)");
    }
    require_config(image_height > 0 && image_width > 0, "image resolution must be positive");
    (void)UVAtlasLayout(atlas_size);
  }

  bool operator==(const DatasetConfig&) const = default;
};

inline void to_json(json& j, const DatasetConfig& c) {
  j = json{{"train_ids", c.train_ids},       {"train_views", c.train_views}, {"test_ids", c.test_ids},
           {"test_views", c.test_views},     {"query_views", c.query_views}, {"image_height", c.image_height},
           {"image_width", c.image_width},   {"atlas_size", c.atlas_size},   {"seed", c.seed}};
}

inline void from_json(const json& j, DatasetConfig& c) {
  DatasetConfig d;
  c.train_ids = j.value("train_ids", d.train_ids);
  c.train_views = j.value("train_views", d.train_views);
  c.test_ids = j.value("test_ids", d.test_ids);
  c.test_views = j.value("test_views", d.test_views);
  c.query_views = j.value("query_views", d.query_views);
  c.image_height = j.value("image_height", d.image_height);
  c.image_width = j.value("image_width", d.image_width);
  c.atlas_size = j.value("atlas_size", d.atlas_size);
  c.seed = j.value("seed", d.seed);
}

struct ManifestRecord {
  std::string sample_id;
  int identity = 0;
  int view = 0;
  Split split = Split::kTrain;
  std::string image_path;    // relative to the dataset root
  std::string texture_path;  // relative to the dataset root
  double visibility_fraction = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ManifestRecord&) const = default;
};

inline json record_to_json(const ManifestRecord& r) {
  return json{{"sample_id", r.sample_id},
              {"identity", r.identity},
              {"view", r.view},
              {"split", to_string(r.split)},
              {"image_path", r.image_path},
              {"texture_path", r.texture_path},
              {"visibility_fraction", r.visibility_fraction},
              {"seed", r.seed}};
}

inline ManifestRecord record_from_json(const json& j) {
  ManifestRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.identity = j.at("identity").get<int>();
  r.view = j.at("view").get<int>();
  r.split = parse_split(j.at("split").get<std::string>());
  r.image_path = j.at("image_path").get<std::string>();
  r.texture_path = j.at("texture_path").get<std::string>();
  r.visibility_fraction = j.at("visibility_fraction").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

struct DatasetManifest {
  fs::path root;
  DatasetConfig config;
  std::uint64_t seed = 0;
  json run_config;  // snapshot of the invoking run, if any
  std::vector<ManifestRecord> records;

  std::vector<const ManifestRecord*> split(Split s) const {
    std::vector<const ManifestRecord*> out;
    for (const auto& r : records)
      if (r.split == s) out.push_back(&r);
    return out;
  }

  std::set<int> identities(Split s) const {
    std::set<int> ids;
    for (const auto& r : records)
      if (r.split == s) ids.insert(r.identity);
    return ids;
  }
};

// Train identities never appear in query/gallery, and every query identity has gallery samples.
inline void validate_manifest(const DatasetManifest& m) {
  const auto train = m.identities(Split::kTrain);
  const auto query = m.identities(Split::kQuery);
  const auto gallery = m.identities(Split::kGallery);
  for (int id : query) {
    if (train.contains(id)) throw DataError("identity " + std::to_string(id) + " is in train and query");
    if (!gallery.contains(id)) throw DataError("query identity " + std::to_string(id) + " missing from gallery");
  }
  for (int id : gallery)
    if (train.contains(id)) throw DataError("identity " + std::to_string(id) + " is in train and gallery");
  std::set<std::string> seen;
  for (const auto& r : m.records)
    if (!seen.insert(r.sample_id).second) throw DataError("duplicate sample id " + r.sample_id);
}

inline void write_manifest(const DatasetManifest& m) {
  fs::create_directories(m.root);
  std::ofstream os(m.root / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + (m.root / "manifest.jsonl").string());
  json header{{"schema_version", kManifestSchemaVersion},
              {"tool", kToolName},
              {"tool_version", kToolVersion},
              {"seed", m.seed},
              {"config", m.config}};
  if (!m.run_config.is_null()) header["run_config"] = m.run_config;
  os << header.dump() << "\n";
  for (const auto& r : m.records) os << record_to_json(r).dump() << "\n";
}

inline DatasetManifest load_manifest(const fs::path& root) {
  std::ifstream is(root / "manifest.jsonl");
  if (!is) throw DataError("cannot open manifest " + (root / "manifest.jsonl").string());
  DatasetManifest m;
  m.root = root;
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty manifest in " + root.string());
  const json header = json::parse(line);
  const int version = header.value("schema_version", -1);
  if (version != kManifestSchemaVersion) {
    throw DataError("unsupported manifest schema version " + std::to_string(version));
  }
  m.seed = header.at("seed").get<std::uint64_t>();
  m.config = header.at("config").get<DatasetConfig>();
  if (header.contains("run_config")) m.run_config = header["run_config"];
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    m.records.push_back(record_from_json(json::parse(line)));
  }
  validate_manifest(m);
  return m;
}

// Identity `id` seen from view number `view`. Pure in (config, id, view).
struct GeneratedSample {
  ManifestRecord record;
  Image person;
  std::vector<std::uint8_t> mask;
};

inline GeneratedSample generate_sample(const DatasetConfig& cfg, const UVAtlasLayout& layout, const Image& texture,
                                       int id, int view, Split split) {
  GeneratedSample s;
  s.record.sample_id = std::to_string(id) + "_" + std::to_string(view);
  s.record.identity = id;
  s.record.view = view;
  s.record.split = split;
  s.record.image_path = "images/" + s.record.sample_id + ".png";
  s.record.texture_path = "textures/" + std::to_string(id) + ".png";
  s.record.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(id), static_cast<std::uint64_t>(view)});
  Rng rng(s.record.seed);
  RenderedView rv = sample_and_render(rng, texture, layout, cfg.image_height, cfg.image_width);
  s.record.visibility_fraction = rv.result.visible_fraction;
  s.person = std::move(rv.result.person);
  s.mask = std::move(rv.result.mask);
  return s;
}

inline DatasetManifest generate_dataset(const DatasetConfig& cfg, const fs::path& root,
                                        const json& run_config = json()) {
  cfg.validate();
  const UVAtlasLayout layout(cfg.atlas_size);
  DatasetManifest m;
  m.root = root;
  m.config = cfg;
  m.seed = cfg.seed;
  m.run_config = run_config;
  fs::create_directories(root / "images");
  fs::create_directories(root / "textures");

  auto emit_identity = [&](int id, int views, auto split_of) {
    const Image texture = make_identity_texture(make_identity_spec(id, cfg.seed), layout);
    write_png(root / "textures" / (std::to_string(id) + ".png"), texture);
    for (int v = 0; v < views; ++v) {
      GeneratedSample s = generate_sample(cfg, layout, texture, id, v, split_of(v));
      write_png(root / s.record.image_path, s.person);
      m.records.push_back(std::move(s.record));
    }
  };

  for (int id = 0; id < cfg.train_ids; ++id) emit_identity(id, cfg.train_views, [](int) { return Split::kTrain; });
  for (int k = 0; k < cfg.test_ids; ++k) {
    emit_identity(cfg.train_ids + k, cfg.test_views,
                  [&](int v) { return v < cfg.query_views ? Split::kQuery : Split::kGallery; });
  }
  validate_manifest(m);
  write_manifest(m);
  return m;
}

// Images (and optionally the per-sample groundtruth textures) of one split, in manifest order.
struct LoadedSplit {
  std::vector<std::string> sample_ids;
  std::vector<int> identities;
  std::vector<int> views;
  Tensor<float> images;
  Tensor<float> textures;
};

inline LoadedSplit load_split(const DatasetManifest& m, Split split, bool with_textures) {
  const auto rows = m.split(split);
  LoadedSplit out;
  const int n = static_cast<int>(rows.size());
  out.images = Tensor<float>(n, 3, m.config.image_height, m.config.image_width);
  if (with_textures) out.textures = Tensor<float>(n, 3, m.config.atlas_size, m.config.atlas_size);
  std::map<std::string, Image> texture_cache;
  std::vector<std::string> missing;
  for (int i = 0; i < n; ++i) {
    const ManifestRecord& r = *rows[static_cast<std::size_t>(i)];
    out.sample_ids.push_back(r.sample_id);
    out.identities.push_back(r.identity);
    out.views.push_back(r.view);
    if (!fs::exists(m.root / r.image_path)) {
      missing.push_back(r.sample_id);
      continue;
    }
    image_to_tensor(read_png(m.root / r.image_path), out.images, i);
    if (with_textures) {
      auto it = texture_cache.find(r.texture_path);
      if (it == texture_cache.end()) {
        if (!fs::exists(m.root / r.texture_path)) throw DataError("missing texture " + r.texture_path);
        it = texture_cache.emplace(r.texture_path, read_png(m.root / r.texture_path)).first;
      }
      image_to_tensor(it->second, out.textures, i);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& s : missing) list += (list.empty() ? "" : ", ") + s;
    throw DataError("missing images for samples: " + list);
  }
  return out;
}

}  // namespace san::datagen
