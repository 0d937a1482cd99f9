// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "san/datagen/dataset.hpp"
#include "san/eval/evaluate.hpp"
#include "san/training/pseudo_gt.hpp"
#include "san/training/trainer.hpp"
#include "san/version.hpp"

namespace san::training {

struct VariantSpec {
  std::string name;
  bool with_decoder = true;
  bool use_syn = false;
  bool use_tr = false;
};

// Row order of the comparison table.
inline const std::array<VariantSpec, 5>& ablation_variants() {
  static const std::array<VariantSpec, 5> v{{{"Baseline", false, false, false},
                                             {"SAN-basic", true, false, false},
                                             {"SAN w/ L_TR", true, false, true},
                                             {"SAN w/ syn. data", true, true, false},
                                             {"SAN", true, true, true}}};
  return v;
}

inline std::string variant_slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

inline datagen::DatasetConfig default_pit_config() {
  datagen::DatasetConfig c;
  c.seed = 1001;
  c.test_ids = 0;
  return c;
}

struct AblationConfig {
  datagen::DatasetConfig reid;
  datagen::DatasetConfig pit = default_pit_config();
  TrainConfig pg;     // step 1
  TrainConfig joint;  // step 2 template; `steps` counts reID batches per run
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::string> variants;  // empty: all five
  eval::EvalConfig eval;

  AblationConfig() {
    pg.steps = 1000;
    pg.optimizer.lr = 1e-3;
    joint.steps = 300;
    joint.optimizer.lr = 1e-3;
  }

  void validate() const {
    reid.validate();
    pit.validate();
    pg.validate();
    joint.validate();
    require_config(!seeds.empty(), "ablation needs at least one seed");
    for (const auto& v : variants) {
      const auto& all = ablation_variants();
      require_config(std::any_of(all.begin(), all.end(), [&](const VariantSpec& s) { return s.name == v; }),
                     "unknown ablation variant '" + v + "'");
    }
  }

  std::vector<VariantSpec> selected() const {
    std::vector<VariantSpec> out;
    for (const auto& v : ablation_variants())
      if (variants.empty() || std::find(variants.begin(), variants.end(), v.name) != variants.end()) out.push_back(v);
    return out;
  }

  // Synthetic-interleaving variants run extra steps so every variant sees the same number of reID batches.
  TrainConfig run_config(const VariantSpec& v, std::uint64_t seed) const {
    TrainConfig c = joint;
    c.with_decoder = v.with_decoder;
    c.use_syn = v.use_syn;
    c.use_tr = v.use_tr;
    c.seed = seed;
    if (c.interleaves()) c.steps = joint.steps * (c.reid_per_cycle + c.syn_per_cycle) / c.reid_per_cycle;
    return c;
  }
};

inline void to_json(json& j, const AblationConfig& c) {
  j = json{{"reid_dataset", c.reid}, {"pit_dataset", c.pit}, {"pg", c.pg},           {"joint", c.joint},
           {"seeds", c.seeds},       {"variants", c.variants}, {"distance", eval::to_string(c.eval.distance)}};
}

inline void from_json(const json& j, AblationConfig& c) {
  AblationConfig d;
  c.reid = j.value("reid_dataset", d.reid);
  c.pit = j.value("pit_dataset", d.pit);
  c.pg = j.value("pg", d.pg);
  c.joint = j.value("joint", d.joint);
  c.seeds = j.value("seeds", d.seeds);
  c.variants = j.value("variants", d.variants);
  if (j.contains("distance")) c.eval.distance = eval::parse_distance(j.at("distance").get<std::string>());
}

struct AblationRun {
  std::uint64_t seed = 0;
  int steps = 0;
  double cmc1 = 0, map = 0;
  double seconds = 0;
  std::size_t decoder_parameters_trained = 0;
};

struct AblationRow {
  std::string variant;
  std::vector<AblationRun> runs;

  double mean_cmc1() const {
    return runs.empty() ? 0.0
                        : std::accumulate(runs.begin(), runs.end(), 0.0,
                                          [](double s, const AblationRun& r) { return s + r.cmc1; }) /
                              static_cast<double>(runs.size());
  }
  double mean_map() const {
    return runs.empty() ? 0.0
                        : std::accumulate(runs.begin(), runs.end(), 0.0,
                                          [](double s, const AblationRun& r) { return s + r.map; }) /
                              static_cast<double>(runs.size());
  }
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<LossLogLine> pg_log;
  double datagen_seconds = 0, pg_seconds = 0, pseudo_gt_seconds = 0, total_seconds = 0;

  const AblationRow* row(const std::string& variant) const {
    for (const auto& r : rows)
      if (r.variant == variant) return &r;
    return nullptr;
  }
};

inline json to_json(const AblationResult& r, const json& run_config) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json runs = json::array();
    for (const auto& run : row.runs) {
      runs.push_back({{"seed", run.seed},
                      {"steps", run.steps},
                      {"cmc1", run.cmc1},
                      {"map", run.map},
                      {"decoder_parameters_trained", run.decoder_parameters_trained}});
    }
    rows.push_back({{"variant", row.variant}, {"mean_cmc1", row.mean_cmc1()}, {"mean_map", row.mean_map()}, {"runs", runs}});
  }
  return json{{"tool", kToolName}, {"tool_version", kToolVersion}, {"config", run_config}, {"rows", rows}};
}

// Markdown table, one row per variant, CMC@1 and mAP in percent (mean over seeds).
inline std::string to_markdown(const AblationResult& r) {
  std::string out = "| Method | CMC@1 (%) | mAP (%) |\n|---|---|---|\n";
  char buf[128];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "| %s | %.1f | %.1f |\n", row.variant.c_str(), 100 * row.mean_cmc1(),
                  100 * row.mean_map());
    out += buf;
  }
  return out;
}

inline void write_loss_log(const fs::path& path, const std::vector<LossLogLine>& log) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  for (const auto& l : log) os << to_json_line(l).dump() << "\n";
}

inline void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

using AblationProgress = std::function<void(const std::string& message)>;

// Full pipeline under `root`: datasets, one SAN-PG, its pseudo groundtruth, then every
// selected variant for every seed, each evaluated on the reID query/gallery split.
inline AblationResult run_ablation(const AblationConfig& cfg, const fs::path& root, const json& run_config = json(),
                                   const AblationProgress& progress = {}) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t) { return std::chrono::duration<double>(clock::now() - t).count(); };
  auto say = [&](const std::string& m) {
    if (progress) progress(m);
  };
  const auto start = clock::now();
  AblationResult result;

  auto t = clock::now();
  const auto reid = datagen::generate_dataset(cfg.reid, root / "data" / "reid", run_config);
  const auto pit = datagen::generate_dataset(cfg.pit, root / "data" / "pit", run_config);
  result.datagen_seconds = seconds_since(t);
  say("datasets ready");

  t = clock::now();
  TrainConfig pg_cfg = cfg.pg;
  pg_cfg.with_decoder = true;
  RunHooks pg_hooks;
  pg_hooks.checkpoint_dir = root / "pg";
  pg_hooks.run_config = run_config;
  auto pg = train_san_pg(pit, pg_cfg, pg_hooks);
  write_loss_log(root / "pg" / "loss_log.jsonl", pg.log);
  result.pg_log = pg.log;
  result.pg_seconds = seconds_since(t);
  say("pseudo generator trained");

  t = clock::now();
  const PseudoGTStore store = generate_pseudo_gt(pg.model, reid, root / "pseudo_gt", run_config);
  result.pseudo_gt_seconds = seconds_since(t);
  say("pseudo groundtruth written");

  for (const auto& v : cfg.selected()) result.rows.push_back({v.name, {}});
  for (std::uint64_t seed : cfg.seeds) {
    for (std::size_t vi = 0; vi < result.rows.size(); ++vi) {
      const VariantSpec v = cfg.selected()[vi];
      const TrainConfig tc = cfg.run_config(v, seed);
      const auto run_start = clock::now();
      json rc = run_config;
      rc["train"] = tc;
      RunHooks hooks;
      hooks.run_config = rc;
      auto res = train_san(reid, &store, &pit, tc, v.with_decoder ? &pg.final_checkpoint : nullptr, hooks);
      const auto report = eval::evaluate(res.model, reid, cfg.eval, rc);
      const fs::path dir = root / "runs" / variant_slug(v.name) / ("seed_" + std::to_string(seed));
      write_loss_log(dir / "loss_log.jsonl", res.log);
      write_json(dir / "metrics.json", eval::to_json(report));
      AblationRun run;
      run.seed = seed;
      run.steps = tc.steps;
      run.cmc1 = report.cmc1;
      run.map = report.map;
      run.seconds = seconds_since(run_start);
      run.decoder_parameters_trained = res.model.decoder_parameter_count();
      result.rows[vi].runs.push_back(run);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s seed %llu: CMC@1 %.3f mAP %.3f (%.0f s)", v.name.c_str(),
                    static_cast<unsigned long long>(seed), run.cmc1, run.map, run.seconds);
      say(buf);
    }
  }
  result.total_seconds = seconds_since(start);
  return result;
}

}  // namespace san::training
