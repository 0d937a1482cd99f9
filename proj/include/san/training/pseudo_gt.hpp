// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/image.hpp"
#include "san/datagen/dataset.hpp"
#include "san/model/san_model.hpp"
#include "san/version.hpp"

namespace san::training {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// sample_id -> predicted texture, for every train image of a reID dataset.
struct PseudoGTStore {
  fs::path root;
  json provenance;
  std::map<std::string, std::string> entries;  // sample_id -> path relative to root
};

inline void write_store_index(const PseudoGTStore& store) {
  std::ofstream os(store.root / "store.jsonl", std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + (store.root / "store.jsonl").string());
  os << json{{"schema_version", 1}, {"tool_version", kToolVersion}, {"provenance", store.provenance}}.dump() << "\n";
  for (const auto& [id, path] : store.entries) os << json{{"sample_id", id}, {"texture_path", path}}.dump() << "\n";
}

inline PseudoGTStore load_pseudo_gt(const fs::path& root) {
  std::ifstream is(root / "store.jsonl");
  if (!is) throw DataError("pseudo groundtruth store not found at " + root.string());
  PseudoGTStore store;
  store.root = root;
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty pseudo groundtruth store " + root.string());
  store.provenance = json::parse(line).value("provenance", json());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    store.entries[j.at("sample_id").get<std::string>()] = j.at("texture_path").get<std::string>();
  }
  return store;
}

inline void require_complete(const PseudoGTStore& store, const datagen::DatasetManifest& reid) {
  std::string missing;
  int count = 0;
  for (const auto* r : reid.split(datagen::Split::kTrain)) {
    if (store.entries.contains(r->sample_id)) continue;
    if (count++ < 20) missing += (missing.empty() ? "" : ", ") + r->sample_id;
  }
  if (count > 0) {
    throw DataError("pseudo groundtruth store is incomplete: " + std::to_string(count) + " train samples missing (" +
                    missing + (count > 20 ? ", ..." : "") + ")");
  }
}

// Eval-mode texture prediction for every train image; one PNG per sample.
inline PseudoGTStore generate_pseudo_gt(model::SanModel<float>& model, const datagen::DatasetManifest& reid,
                                        const fs::path& out, json provenance = json(), int batch_size = 32) {
  require_config(model.has_decoder(), "pseudo groundtruth generation needs a decoder");
  const datagen::LoadedSplit split = datagen::load_split(reid, datagen::Split::kTrain, false);
  PseudoGTStore store;
  store.root = out;
  store.provenance = std::move(provenance);
  fs::create_directories(out / "textures");
  const int n = static_cast<int>(split.sample_ids.size());
  for (int start = 0; start < n; start += batch_size) {
    std::vector<int> rows;
    for (int i = start; i < std::min(n, start + batch_size); ++i) rows.push_back(i);
    const Tensor<float> batch = split.images.gather(rows);
    const auto res = model.forward(batch, model::Pass::kEval);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string& sid = split.sample_ids[static_cast<std::size_t>(rows[r])];
      const std::string rel = "textures/" + sid + ".png";
      write_png(out / rel, tensor_to_image(res.decoded->texture, static_cast<int>(r)));
      store.entries[sid] = rel;
    }
  }
  write_store_index(store);
  return store;
}

// Targets aligned with the rows of `split`.
inline Tensor<float> load_pseudo_targets(const PseudoGTStore& store, const datagen::LoadedSplit& split, int atlas) {
  Tensor<float> targets(static_cast<int>(split.sample_ids.size()), 3, atlas, atlas);
  for (std::size_t i = 0; i < split.sample_ids.size(); ++i) {
    auto it = store.entries.find(split.sample_ids[i]);
    if (it == store.entries.end()) throw DataError("pseudo groundtruth missing for " + split.sample_ids[i]);
    image_to_tensor(read_png(store.root / it->second), targets, static_cast<int>(i));
  }
  return targets;
}

}  // namespace san::training
