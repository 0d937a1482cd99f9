// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/random.hpp"
#include "san/datagen/dataset.hpp"
#include "san/losses/losses.hpp"
#include "san/model/checkpoint.hpp"
#include "san/model/san_model.hpp"
#include "san/training/optimizer.hpp"
#include "san/training/pseudo_gt.hpp"
#include "san/training/sampler.hpp"
#include "san/version.hpp"

namespace san::training {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using losses::LossComponents;
using losses::LossWeights;

enum class BatchKind { kReid, kSynthetic };

inline std::string to_string(BatchKind k) { return k == BatchKind::kReid ? "reid" : "synthetic"; }

enum class Stage { kPseudoGenerator, kJoint };

struct TrainConfig {
  OptimizerConfig optimizer;
  int steps = 400;
  int reid_per_cycle = 1;  // interleave ratio reid : synthetic
  int syn_per_cycle = 1;
  bool use_syn = true;
  bool use_tr = true;
  bool with_decoder = true;  // false trains the encoder-only baseline
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // 0: final checkpoint only
  PKBatchSpec pk;
  losses::LossConfig loss;

  void validate() const {
    optimizer.validate();
    pk.validate();
    loss.validate();
    require_config(steps > 0, "steps must be positive");
    require_config(reid_per_cycle > 0 && syn_per_cycle > 0, "interleave ratio must be positive integers");
    require_config(checkpoint_every >= 0, "checkpoint_every must be >= 0");
  }

  bool interleaves() const { return with_decoder && use_syn; }

  std::string variant() const {
    if (!with_decoder) return "Baseline";
    if (use_syn && use_tr) return "SAN";
    if (use_syn) return "SAN w/ syn. data";
    if (use_tr) return "SAN w/ L_TR";
    return "SAN-basic";
  }

  BatchKind kind_at(int step) const {
    if (!interleaves()) return BatchKind::kReid;
    return step % (reid_per_cycle + syn_per_cycle) < reid_per_cycle ? BatchKind::kReid : BatchKind::kSynthetic;
  }

  LossWeights weights(BatchKind kind) const {
    if (kind == BatchKind::kSynthetic) return LossWeights::synthetic();
    LossWeights w = LossWeights::reid();
    if (!with_decoder) {
      w.rec = 0;
      w.tr = 0;
    } else if (!use_tr) {
      w.tr = 0;
    }
    return w;
  }
};

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"optimizer", c.optimizer},
           {"steps", c.steps},
           {"interleave", {c.reid_per_cycle, c.syn_per_cycle}},
           {"use_syn", c.use_syn},
           {"use_tr", c.use_tr},
           {"with_decoder", c.with_decoder},
           {"seed", c.seed},
           {"checkpoint_every", c.checkpoint_every},
           {"pk", c.pk},
           {"loss", c.loss},
           {"variant", c.variant()}};
}

inline void from_json(const json& j, TrainConfig& c) {
  TrainConfig d;
  c.optimizer = j.value("optimizer", d.optimizer);
  c.steps = j.value("steps", d.steps);
  if (j.contains("interleave")) {
    const auto r = j.at("interleave").get<std::vector<int>>();
    require_config(r.size() == 2, "interleave must be [reid, synthetic]");
    c.reid_per_cycle = r[0];
    c.syn_per_cycle = r[1];
  }
  c.use_syn = j.value("use_syn", d.use_syn);
  c.use_tr = j.value("use_tr", d.use_tr);
  c.with_decoder = j.value("with_decoder", d.with_decoder);
  c.seed = j.value("seed", d.seed);
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.pk = j.value("pk", d.pk);
  c.loss = j.value("loss", d.loss);
}

struct LossLogLine {
  int step = 0;
  BatchKind kind = BatchKind::kReid;
  losses::LossReport report;
};

inline json to_json_line(const LossLogLine& l) {
  const auto& c = l.report.components;
  const auto& w = l.report.weights;
  return json{{"step", l.step},
              {"kind", to_string(l.kind)},
              {"l_id", c.id},
              {"l_tri", c.triplet},
              {"l_rec", c.rec},
              {"l_tr", c.tr},
              {"total", l.report.total},
              {"weights", {w.id, w.triplet, w.rec, w.tr}}};
}

inline LossLogLine parse_log_line(const json& j) {
  LossLogLine l;
  l.step = j.at("step").get<int>();
  l.kind = j.at("kind").get<std::string>() == "reid" ? BatchKind::kReid : BatchKind::kSynthetic;
  l.report.components = {j.at("l_id").get<double>(), j.at("l_tri").get<double>(), j.at("l_rec").get<double>(),
                         j.at("l_tr").get<double>()};
  const auto w = j.at("weights").get<std::vector<double>>();
  l.report.weights = {w.at(0), w.at(1), w.at(2), w.at(3)};
  l.report.total = j.at("total").get<double>();
  return l;
}

// Moving average of L_Rec over a trailing window.
inline std::vector<double> smoothed_rec(const std::vector<LossLogLine>& log, int window = 50) {
  std::vector<double> out;
  double sum = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    sum += log[i].report.components.rec;
    if (i >= static_cast<std::size_t>(window)) sum -= log[i - static_cast<std::size_t>(window)].report.components.rec;
    out.push_back(sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window))));
  }
  return out;
}

// In-memory training inputs. `reid_targets` holds one pseudo-groundtruth texture per reid row.
struct TrainingData {
  datagen::LoadedSplit reid;
  Tensor<float> reid_targets;
  datagen::LoadedSplit pit;
};

namespace detail {

inline std::vector<double> to_double(const Tensor<float>& t) { return {t.values().begin(), t.values().end()}; }

inline Tensor<float> to_float(const std::vector<double>& v, const Shape& s, double scale) {
  Tensor<float> t(s);
  for (std::size_t k = 0; k < v.size(); ++k) t[k] = static_cast<float>(v[k] * scale);
  return t;
}

}  // namespace detail

class Trainer {
 public:
  Trainer(Stage stage, TrainConfig cfg, model::SanModel<float>& model, const TrainingData& data)
      : stage_(stage),
        cfg_(std::move(cfg)),
        model_(model),
        data_(data),
        adam_(model.parameters(), cfg_.optimizer, cfg_.steps),
        reid_rng_(derive_seed(cfg_.seed, {0x5e1d})),
        syn_rng_(derive_seed(cfg_.seed, {0x5171})),
        triple_rng_(derive_seed(cfg_.seed, {0x7219})) {
    cfg_.validate();
    if (stage_ == Stage::kPseudoGenerator || cfg_.interleaves()) {
      require_config(model.has_decoder(), "synthetic batches need a decoder");
      if (data.pit.textures.empty()) throw DataError("synthetic batches need groundtruth textures");
      pit_groups_ = group_by_identity(data.pit.identities);
    }
    if (stage_ == Stage::kJoint) {
      require_config(model.has_classifier(), "joint training needs an identity classifier");
      reid_groups_ = group_by_identity(data.reid.identities);
      int k = 0;
      for (const auto& [id, rows] : reid_groups_) class_of_[id] = k++;
      require_config(k == model.config().num_classes, "classifier size " +
                                                          std::to_string(model.config().num_classes) +
                                                          " does not match " + std::to_string(k) + " train identities");
      if (cfg_.with_decoder) {
        require_config(model.has_decoder(), "config expects a decoder");
        if (data.reid_targets.n() != data.reid.images.n()) {
          throw DataError("pseudo groundtruth targets do not cover the reID train split");
        }
      }
    }
  }

  int current_step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }

  BatchKind next_kind() const {
    return stage_ == Stage::kPseudoGenerator ? BatchKind::kSynthetic : cfg_.kind_at(step_);
  }

  LossLogLine step() {
    require_config(step_ < cfg_.steps, "training already finished");
    const BatchKind kind = next_kind();
    model_.zero_grad();
    LossLogLine line;
    line.step = step_;
    line.kind = kind;
    line.report = kind == BatchKind::kReid ? reid_step() : synthetic_step();
    adam_.step();
    ++step_;
    return line;
  }

  model::Checkpoint checkpoint(const json& run_config = json()) const {
    model::Checkpoint ck;
    ck.step = static_cast<std::uint64_t>(step_);
    ck.seed = cfg_.seed;
    ck.config["tool"] = kToolName;
    ck.config["tool_version"] = kToolVersion;
    ck.config["stage"] = stage_ == Stage::kPseudoGenerator ? "san_pg" : "san";
    ck.config["train"] = cfg_;
    if (!run_config.is_null()) ck.config["run"] = run_config;
    model::export_model(model_, ck);
    adam_.export_state(ck);
    ck.texts["rng.reid"] = rng_state(reid_rng_);
    ck.texts["rng.syn"] = rng_state(syn_rng_);
    ck.texts["rng.triples"] = rng_state(triple_rng_);
    return ck;
  }

  // Continues a run from a checkpoint written by `checkpoint()`.
  void restore(const model::Checkpoint& ck) {
    model::import_model(model_, ck);
    adam_.import_state(ck);
    for (const char* key : {"rng.reid", "rng.syn", "rng.triples"}) {
      if (!ck.texts.contains(key)) throw ConfigError(std::string("checkpoint lacks ") + key);
    }
    restore_rng(reid_rng_, ck.texts.at("rng.reid"));
    restore_rng(syn_rng_, ck.texts.at("rng.syn"));
    restore_rng(triple_rng_, ck.texts.at("rng.triples"));
    step_ = static_cast<int>(ck.step);
  }

 private:
  losses::LossReport reid_step() {
    const std::vector<int> rows = sample_pk_batch(reid_groups_, cfg_.pk, reid_rng_);
    std::vector<int> labels;
    for (int r : rows) labels.push_back(class_of_.at(data_.reid.identities[static_cast<std::size_t>(r)]));
    check_pk(labels);
    const LossWeights w = cfg_.weights(BatchKind::kReid);
    const Tensor<float> images = data_.reid.images.gather(rows);
    model::ForwardCache<float> cache;
    const auto fwd = model_.forward(images, model::Pass::kTrain, &cache);
    const int n = images.n();

    LossComponents c;
    model::OutputGrads<float> g;
    const auto logits = detail::to_double(fwd.logits);
    const auto id = losses::id_loss<double>(logits, n, fwd.logits.c(), labels);
    c.id = id.value;
    g.logits = detail::to_float(id.grad, fwd.logits.shape(), w.id);

    const auto emb = detail::to_double(fwd.embedding);
    const auto tri = losses::batch_hard_triplet<double>(emb, n, fwd.embedding.c(), labels, cfg_.loss.triplet_margin);
    c.triplet = tri.value;
    g.embedding = detail::to_float(tri.grad, fwd.embedding.shape(), w.triplet);

    if (fwd.decoded) {
      const Tensor<float> targets = data_.reid_targets.gather(rows);
      const auto pred = detail::to_double(fwd.decoded->texture);
      const auto rec = losses::reconstruction_loss<double>(pred, detail::to_double(targets));
      c.rec = rec.value;
      g.texture = detail::to_float(rec.grad, targets.shape(), w.rec);

      const auto triples = select_tr_triplets(labels, triple_rng_);
      std::vector<std::vector<double>> tap_values;
      std::vector<losses::TapBatch<double>> blocks;
      for (int b : cfg_.loss.tr_blocks) tap_values.push_back(detail::to_double(fwd.decoded->taps[static_cast<std::size_t>(b - 1)]));
      for (std::size_t i = 0; i < tap_values.size(); ++i) {
        const auto& t = fwd.decoded->taps[static_cast<std::size_t>(cfg_.loss.tr_blocks[i] - 1)];
        blocks.push_back({tap_values[i], n, t.h() * t.w()});
      }
      const auto tr = losses::tr_batch_loss<double>(blocks, triples, cfg_.loss.tr_margin);
      c.tr = tr.value;
      if (w.tr > 0) {
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          const auto& t = fwd.decoded->taps[static_cast<std::size_t>(cfg_.loss.tr_blocks[i] - 1)];
          g.taps[static_cast<std::size_t>(cfg_.loss.tr_blocks[i] - 1)] = detail::to_float(tr.grads[i], t.shape(), w.tr);
        }
      }
    }
    model_.backward(g, cache);
    return losses::make_report(c, w);
  }

  losses::LossReport synthetic_step() {
    const std::vector<int> rows = sample_pk_batch(pit_groups_, cfg_.pk, syn_rng_);
    const LossWeights w = LossWeights::synthetic();
    const Tensor<float> images = data_.pit.images.gather(rows);
    const Tensor<float> targets = data_.pit.textures.gather(rows);
    model::ForwardCache<float> cache;
    const auto fwd = model_.forward(images, model::Pass::kTrain, &cache);
    LossComponents c;
    const auto rec = losses::reconstruction_loss<double>(detail::to_double(fwd.decoded->texture),
                                                         detail::to_double(targets));
    c.rec = rec.value;
    model::OutputGrads<float> g;
    g.texture = detail::to_float(rec.grad, targets.shape(), w.rec);
    model_.backward(g, cache);
    return losses::make_report(c, w);
  }

  void check_pk(const std::vector<int>& labels) const {
    std::map<int, int> counts;
    for (int l : labels) ++counts[l];
    if (static_cast<int>(counts.size()) != cfg_.pk.p) throw Error("PK invariant violated: wrong identity count");
    for (const auto& [l, n] : counts)
      if (n != cfg_.pk.k) throw Error("PK invariant violated: identity " + std::to_string(l) + " has " + std::to_string(n));
  }

  Stage stage_;
  TrainConfig cfg_;
  model::SanModel<float>& model_;
  const TrainingData& data_;
  Adam adam_;
  Rng reid_rng_, syn_rng_, triple_rng_;
  std::map<int, std::vector<int>> reid_groups_, pit_groups_;
  std::map<int, int> class_of_;
  int step_ = 0;
};

// Optional side outputs of a training run.
struct RunHooks {
  std::ostream* log = nullptr;      // one JSON line per step
  fs::path checkpoint_dir;          // periodic + final checkpoints when non-empty
  json run_config;
  const model::Checkpoint* resume = nullptr;
  std::function<void(const LossLogLine&)> on_step;
};

struct TrainResult {
  model::SanModel<float> model;
  std::vector<LossLogLine> log;
  model::Checkpoint final_checkpoint;
};

inline void run_steps(Trainer& trainer, RunHooks& hooks, std::vector<LossLogLine>& log) {
  while (trainer.current_step() < trainer.config().steps) {
    LossLogLine line = trainer.step();
    if (hooks.log) *hooks.log << to_json_line(line).dump() << "\n";
    if (hooks.on_step) hooks.on_step(line);
    log.push_back(line);
    const int done = trainer.current_step();
    if (!hooks.checkpoint_dir.empty() && trainer.config().checkpoint_every > 0 &&
        done % trainer.config().checkpoint_every == 0 && done < trainer.config().steps) {
      model::save_checkpoint(hooks.checkpoint_dir / ("step_" + std::to_string(done) + ".ckpt"),
                             trainer.checkpoint(hooks.run_config));
    }
  }
}

inline model::ModelConfig model_config_for(const datagen::DatasetConfig& d) {
  return model::ModelConfig::for_resolution(d.image_height, d.image_width, d.atlas_size);
}

// Step 1: encoder + decoder trained on synthetic pairs with the reconstruction loss only.
inline TrainResult train_san_pg(const datagen::DatasetManifest& pit, const TrainConfig& cfg, RunHooks hooks = {}) {
  cfg.validate();
  TrainingData data;
  data.pit = datagen::load_split(pit, datagen::Split::kTrain, true);
  model::ModelConfig mc = model_config_for(pit.config);
  mc.with_decoder = true;
  mc.num_classes = 0;
  TrainResult res{model::SanModel<float>(mc), {}, {}};
  res.model.init(cfg.seed);
  Trainer trainer(Stage::kPseudoGenerator, cfg, res.model, data);
  if (hooks.resume) trainer.restore(*hooks.resume);
  run_steps(trainer, hooks, res.log);
  res.final_checkpoint = trainer.checkpoint(hooks.run_config);
  if (!hooks.checkpoint_dir.empty()) model::save_checkpoint(hooks.checkpoint_dir / "final.ckpt", res.final_checkpoint);
  return res;
}

// Step 2 (or the baseline when cfg.with_decoder is false). `init` is the SAN-PG checkpoint;
// its encoder and decoder weights are copied and the identity classifier is freshly drawn.
inline TrainResult train_san(const datagen::DatasetManifest& reid, const PseudoGTStore* store,
                             const datagen::DatasetManifest* pit, const TrainConfig& cfg,
                             const model::Checkpoint* init, RunHooks hooks = {}) {
  cfg.validate();
  TrainingData data;
  data.reid = datagen::load_split(reid, datagen::Split::kTrain, false);
  model::ModelConfig mc = model_config_for(reid.config);
  mc.with_decoder = cfg.with_decoder;
  mc.num_classes = static_cast<int>(group_by_identity(data.reid.identities).size());
  if (cfg.with_decoder) {
    if (!store) throw DataError("joint training requires a pseudo groundtruth store");
    require_complete(*store, reid);
    data.reid_targets = load_pseudo_targets(*store, data.reid, reid.config.atlas_size);
    if (cfg.use_syn) {
      if (!pit) throw DataError("synthetic batches requested but no PIT dataset given");
      data.pit = datagen::load_split(*pit, datagen::Split::kTrain, true);
    }
  }
  TrainResult res{model::SanModel<float>(mc), {}, {}};
  res.model.init(cfg.seed);
  if (init) model::import_model(res.model, *init, {.skip_classifier = true, .allow_missing = false});
  Trainer trainer(Stage::kJoint, cfg, res.model, data);
  if (hooks.resume) trainer.restore(*hooks.resume);
  run_steps(trainer, hooks, res.log);
  res.final_checkpoint = trainer.checkpoint(hooks.run_config);
  if (!hooks.checkpoint_dir.empty()) model::save_checkpoint(hooks.checkpoint_dir / "final.ckpt", res.final_checkpoint);
  return res;
}

}  // namespace san::training
