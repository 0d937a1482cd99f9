// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/tensor.hpp"
#include "san/model/san_model.hpp"

namespace san::model {

namespace fs = std::filesystem;

// Binary archive layout (little endian):
//   "SANCKPT1" | u64 step | u64 seed | str config_json | u32 n_texts  | (str key, str value)*
//   | u32 n_tensors | (str name, i32 n, i32 c, i32 h, i32 w, f32[numel])*
// where str = u64 length + bytes.
struct Checkpoint {
  json config;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> texts;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'N', 'C', 'K', 'P', 'T', '1'};

namespace detail {

template <typename V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}
inline void put_str(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
template <typename V>
V get(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw DataError("truncated checkpoint");
  return v;
}
inline std::string get_str(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1ull << 32)) throw DataError("corrupt checkpoint string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw DataError("truncated checkpoint");
  return s;
}

}  // namespace detail

inline void save_checkpoint(const fs::path& path, const Checkpoint& ck) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write checkpoint " + path.string());
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put<std::uint64_t>(os, ck.step);
  detail::put<std::uint64_t>(os, ck.seed);
  detail::put_str(os, ck.config.dump());
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(ck.texts.size()));
  for (const auto& [k, v] : ck.texts) {
    detail::put_str(os, k);
    detail::put_str(os, v);
  }
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    detail::put_str(os, name);
    detail::put<std::int32_t>(os, t.n());
    detail::put<std::int32_t>(os, t.c());
    detail::put<std::int32_t>(os, t.h());
    detail::put<std::int32_t>(os, t.w());
    os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!os) throw DataError("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + " is not a checkpoint");
  }
  Checkpoint ck;
  ck.step = detail::get<std::uint64_t>(is);
  ck.seed = detail::get<std::uint64_t>(is);
  ck.config = json::parse(detail::get_str(is));
  const auto n_texts = detail::get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_texts; ++i) {
    std::string k = detail::get_str(is);
    ck.texts[k] = detail::get_str(is);
  }
  const auto n_tensors = detail::get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = detail::get_str(is);
    Shape s;
    s.n = detail::get<std::int32_t>(is);
    s.c = detail::get<std::int32_t>(is);
    s.h = detail::get<std::int32_t>(is);
    s.w = detail::get<std::int32_t>(is);
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) throw DataError("corrupt tensor shape for " + name);
    Tensor<float> t(s);
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!is) throw DataError("truncated tensor " + name);
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

// Appends every parameter and running statistic of `model` under its canonical name.
inline void export_model(SanModel<float>& model, Checkpoint& ck) {
  for (auto* p : model.parameters()) ck.tensors.emplace_back(p->name, p->value);
  ck.config["model"] = model.config();
}

struct ImportOptions {
  bool skip_classifier = false;  // keep the freshly initialised identity head
  bool allow_missing = false;    // e.g. a decoder-bearing model loading a checkpoint without one
};

// Rejects checkpoints whose encoder/decoder configuration differs from `model`.
inline void import_model(SanModel<float>& model, const Checkpoint& ck, ImportOptions opt = {}) {
  if (!ck.config.contains("model")) throw ConfigError("checkpoint has no model configuration");
  const ModelConfig stored = ck.config.at("model").get<ModelConfig>();
  const ModelConfig& mine = model.config();
  if (!(stored.encoder == mine.encoder)) throw ConfigError("checkpoint encoder configuration is incompatible");
  if (mine.with_decoder && stored.with_decoder && !(stored.decoder == mine.decoder)) {
    throw ConfigError("checkpoint decoder configuration is incompatible");
  }
  if (!opt.skip_classifier && mine.num_classes != stored.num_classes) {
    throw ConfigError("checkpoint classifier has " + std::to_string(stored.num_classes) + " classes, model has " +
                      std::to_string(mine.num_classes));
  }
  for (auto* p : model.parameters()) {
    const bool is_classifier = p->name.rfind("classifier.", 0) == 0;
    if (is_classifier && opt.skip_classifier) continue;
    const Tensor<float>* t = ck.find(p->name);
    if (!t) {
      if (opt.allow_missing) continue;
      throw ConfigError("checkpoint lacks tensor " + p->name);
    }
    if (!(t->shape() == p->value.shape())) {
      throw ConfigError("tensor " + p->name + " has shape " + t->shape().str() + ", expected " +
                        p->value.shape().str());
    }
    p->value = *t;
  }
}

inline SanModel<float> model_from_checkpoint(const Checkpoint& ck) {
  if (!ck.config.contains("model")) throw ConfigError("checkpoint has no model configuration");
  SanModel<float> model(ck.config.at("model").get<ModelConfig>());
  import_model(model, ck);
  return model;
}

}  // namespace san::model
