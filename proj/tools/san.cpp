// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/runtime.hpp"
#include "san/datagen/dataset.hpp"
#include "san/eval/evaluate.hpp"
#include "san/model/checkpoint.hpp"
#include "san/training/ablation.hpp"
#include "san/training/pseudo_gt.hpp"
#include "san/training/trainer.hpp"
#include "san/verify/verify.hpp"
#include "san/version.hpp"
#include "san/viz/plot.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace san;

constexpr const char* kOutputRootEnv = "SAN_OUTPUT_ROOT";

// Relative output paths land under $SAN_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& p) {
  const fs::path path(p);
  const char* root = std::getenv(kOutputRootEnv);
  if (path.is_absolute() || root == nullptr || *root == '\0') return path;
  return fs::path(root) / path;
}

json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

// Flags shared by every subcommand.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  json file() const { return config_path.empty() ? json::object() : read_json_file(config_path); }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Global seed");
}

json snapshot(const std::string& command, const Common& c, json body) {
  json j{{"command", command}, {"tool", kToolName}, {"tool_version", kToolVersion}};
  if (c.seed) j["seed"] = *c.seed;
  for (auto& [k, v] : body.items()) j[k] = v;
  return j;
}

template <typename T>
T section(const json& file, const char* key, T fallback) {
  try {
    return file.contains(key) ? file.at(key).get<T>() : fallback;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config section '") + key + "' is invalid: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

std::vector<training::LossLogLine> read_loss_log(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read loss log " + path.string());
  std::vector<training::LossLogLine> log;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) log.push_back(training::parse_log_line(json::parse(line)));
  return log;
}

// ---------------------------------------------------------------- datagen

struct DatagenArgs {
  Common common;
  std::string out;
  std::optional<int> ids, views, test_ids, test_views, query_views;
  bool paper_scale = false;
};

int cmd_datagen(const DatagenArgs& a) {
  const json file = a.common.file();
  datagen::DatasetConfig cfg = a.paper_scale ? datagen::DatasetConfig::paper_scale() : datagen::DatasetConfig{};
  cfg = section(file, "dataset", cfg);
  if (a.common.seed) cfg.seed = *a.common.seed;
  if (a.ids) cfg.train_ids = *a.ids;
  if (a.views) cfg.train_views = *a.views;
  if (a.test_ids) cfg.test_ids = *a.test_ids;
  if (a.test_views) cfg.test_views = *a.test_views;
  if (a.query_views) cfg.query_views = *a.query_views;
  cfg.validate();
  const fs::path out = output_path(a.out);
  const json rc = snapshot("datagen", a.common, {{"dataset", cfg}});
  const auto m = datagen::generate_dataset(cfg, out, rc);
  std::cout << "wrote " << m.records.size() << " samples (" << m.split(datagen::Split::kTrain).size() << " train, "
            << m.split(datagen::Split::kQuery).size() << " query, " << m.split(datagen::Split::kGallery).size()
            << " gallery) to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- training

struct TrainArgs {
  Common common;
  std::string out;
  std::string pit, reid, pseudo_store, init, resume;
  std::optional<int> steps, checkpoint_every;
  std::optional<double> lr;
  bool no_syn = false, no_tr = false, baseline = false;
};

training::TrainConfig train_config(const TrainArgs& a, const json& file, const char* key) {
  training::TrainConfig cfg = section(file, key, training::TrainConfig{});
  if (a.common.seed) cfg.seed = *a.common.seed;
  if (a.steps) cfg.steps = *a.steps;
  if (a.checkpoint_every) cfg.checkpoint_every = *a.checkpoint_every;
  if (a.lr) cfg.optimizer.lr = *a.lr;
  cfg.validate();
  return cfg;
}

training::RunHooks run_hooks(std::ostream* log, const fs::path& out, const json& rc,
                             const std::optional<model::Checkpoint>& resume) {
  training::RunHooks h;
  h.log = log;
  h.checkpoint_dir = out;
  h.run_config = rc;
  h.resume = resume ? &*resume : nullptr;
  return h;
}

int cmd_train_pg(const TrainArgs& a) {
  const json file = a.common.file();
  training::TrainConfig cfg = train_config(a, file, "pg");
  cfg.with_decoder = true;
  const fs::path out = output_path(a.out);
  const fs::path pit_root = fs::absolute(a.pit);
  const auto pit = datagen::load_manifest(pit_root);
  const json rc = snapshot("train-pg", a.common, {{"pit", pit_root.string()}, {"pg", cfg}});
  std::optional<model::Checkpoint> resume;
  if (!a.resume.empty()) resume = model::load_checkpoint(a.resume);
  fs::create_directories(out);
  std::ofstream log(out / "loss_log.jsonl", std::ios::binary | std::ios::trunc);
  const auto res = training::train_san_pg(pit, cfg, run_hooks(&log, out, rc, resume));
  training::write_json(out / "run_config.json", rc);
  const auto smooth = training::smoothed_rec(res.log);
  if (!smooth.empty()) {
    std::cout << "SAN-PG: " << res.log.size() << " steps, smoothed L_Rec " << smooth.front() << " -> " << smooth.back()
              << "\n";
  }
  std::cout << "checkpoint " << (out / "final.ckpt").string() << "\n";
  return 0;
}

struct PseudoArgs {
  Common common;
  std::string checkpoint, reid, out;
};

int cmd_pseudo_gt(const PseudoArgs& a) {
  const fs::path ck_path = fs::absolute(a.checkpoint);
  const auto ck = model::load_checkpoint(ck_path);
  auto m = model::model_from_checkpoint(ck);
  const auto reid = datagen::load_manifest(a.reid);
  json provenance{{"checkpoint", ck_path.string()}, {"checkpoint_step", ck.step}};
  if (ck.config.contains("run") && ck.config["run"].contains("pit")) provenance["pit"] = ck.config["run"]["pit"];
  provenance["run_config"] = snapshot("pseudo-gt", a.common, {{"reid", fs::absolute(a.reid).string()}});
  const fs::path out = output_path(a.out);
  const auto store = training::generate_pseudo_gt(m, reid, out, provenance);
  std::cout << "wrote " << store.entries.size() << " pseudo groundtruth textures to " << out.string() << "\n";
  return 0;
}

int cmd_train(const TrainArgs& a) {
  const json file = a.common.file();
  training::TrainConfig cfg = train_config(a, file, "train");
  if (a.baseline) {
    cfg.with_decoder = false;
    cfg.use_syn = false;
    cfg.use_tr = false;
  }
  if (a.no_syn) cfg.use_syn = false;
  if (a.no_tr) cfg.use_tr = false;
  const auto reid = datagen::load_manifest(a.reid);

  std::optional<training::PseudoGTStore> store;
  std::optional<model::Checkpoint> init;
  std::optional<datagen::DatasetManifest> pit;
  if (cfg.with_decoder) {
    if (a.pseudo_store.empty()) throw ConfigError("--pseudo-store is required unless --baseline is given");
    store = training::load_pseudo_gt(a.pseudo_store);
    std::string init_path = a.init;
    if (init_path.empty()) init_path = store->provenance.value("checkpoint", std::string());
    if (init_path.empty()) throw ConfigError("no SAN-PG checkpoint: pass --init");
    init = model::load_checkpoint(init_path);
    if (cfg.use_syn) {
      std::string pit_path = a.pit;
      if (pit_path.empty()) pit_path = store->provenance.value("pit", std::string());
      if (pit_path.empty()) throw ConfigError("synthetic batches need a PIT dataset: pass --pit or --no-syn");
      pit = datagen::load_manifest(pit_path);
    }
  }
  const fs::path out = output_path(a.out);
  const json rc = snapshot("train", a.common, {{"reid", fs::absolute(a.reid).string()}, {"train", cfg}});
  std::optional<model::Checkpoint> resume;
  if (!a.resume.empty()) resume = model::load_checkpoint(a.resume);
  fs::create_directories(out);
  std::ofstream log(out / "loss_log.jsonl", std::ios::binary | std::ios::trunc);
  const auto res = training::train_san(
      reid, store ? &*store : nullptr, pit ? &*pit : nullptr, cfg, init ? &*init : nullptr,
      run_hooks(&log, out, rc, resume));
  training::write_json(out / "run_config.json", rc);
  std::cout << cfg.variant() << ": " << res.log.size() << " steps, checkpoint " << (out / "final.ckpt").string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  std::string checkpoint, data, out, distance = "euclidean";
  std::optional<double> partial, partial_max;
  bool l2_normalize = false;
};

int cmd_eval(const EvalArgs& a) {
  eval::EvalConfig cfg;
  cfg.distance = eval::parse_distance(a.distance);
  cfg.l2_normalize = a.l2_normalize;
  if (a.partial) {
    cfg.partial_min = *a.partial;
    cfg.partial_max = a.partial_max.value_or(*a.partial);
  } else if (a.partial_max) {
    throw ConfigError("--partial-max needs --partial");
  }
  cfg.partial_seed = a.common.seed.value_or(0);
  const auto ck = model::load_checkpoint(a.checkpoint);
  auto m = model::model_from_checkpoint(ck);
  const auto manifest = datagen::load_manifest(a.data);
  json rc = snapshot("eval", a.common, {{"checkpoint", fs::absolute(a.checkpoint).string()},
                                        {"data", fs::absolute(a.data).string()},
                                        {"checkpoint_config", ck.config}});
  const auto report = eval::evaluate(m, manifest, cfg, rc);
  const json j = eval::to_json(report);
  if (a.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    training::write_json(output_path(a.out), j);
    std::cout << "CMC@1 " << report.cmc1 << "  CMC@5 " << report.cmc5 << "  CMC@10 " << report.cmc10 << "  mAP "
              << report.map << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  Common common;
  std::string out;
  std::optional<int> seeds, steps, pg_steps;
  std::optional<double> lr;
  std::vector<std::string> variants;
  std::string distance = "euclidean";
};

int cmd_ablate(const AblateArgs& a) {
  const json file = a.common.file();
  training::AblationConfig cfg = section(file, "ablation", training::AblationConfig{});
  if (a.seeds) {
    require_config(*a.seeds > 0, "--seeds must be positive");
    cfg.seeds.clear();
    for (int s = 0; s < *a.seeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s) + a.common.seed.value_or(0));
  }
  if (a.steps) cfg.joint.steps = *a.steps;
  if (a.pg_steps) cfg.pg.steps = *a.pg_steps;
  if (a.lr) cfg.pg.optimizer.lr = cfg.joint.optimizer.lr = *a.lr;
  if (!a.variants.empty()) cfg.variants = a.variants;
  cfg.eval.distance = eval::parse_distance(a.distance);
  cfg.validate();
  const fs::path out = output_path(a.out);
  const json rc = snapshot("ablate", a.common, {{"ablation", cfg}});
  const auto result = training::run_ablation(cfg, out, rc, [](const std::string& m) { std::cerr << m << "\n"; });
  training::write_json(out / "ablation.json", training::to_json(result, rc));
  write_text(out / "ablation.md", training::to_markdown(result));
  std::cout << training::to_markdown(result);
  std::cerr << "total " << result.total_seconds << " s\n";
  return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  Common common;
  int instances = 200;
  std::optional<double> inject_margin;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  verify::VerifyOptions opts;
  opts.instances = a.instances;
  opts.seed = a.common.seed.value_or(0);
  opts.injected_tr_margin = a.inject_margin;
  require_config(opts.instances > 0, "--instances must be positive");
  const auto report = verify::run_verify(opts);
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.family << " / " << c.name << "  (" << c.instances
              << " instances, max error " << c.max_error << ", tolerance " << c.tolerance << ")\n";
  }
  std::cout << report.families().size() << " check families, " << (report.passed() ? "all passed" : "FAILURES")
            << "\n";
  if (!a.out.empty()) training::write_json(output_path(a.out), verify::to_json(report, opts));
  return report.passed() ? 0 : 2;
}

// ---------------------------------------------------------------- plot

struct PlotArgs {
  Common common;
  std::string out, log, checkpoint, data, split = "train";
  std::vector<std::string> reports;
  int samples = 4;
};

int cmd_plot(const PlotArgs& a) {
  require_config(!a.log.empty() || !a.reports.empty() || !a.checkpoint.empty(),
                 "nothing to plot: pass --log, --report or --checkpoint");
  const fs::path out = output_path(a.out);
  fs::create_directories(out);
  if (!a.log.empty()) {
    write_png(out / "loss_curves.png", viz::loss_curves(read_loss_log(a.log)));
    std::cout << (out / "loss_curves.png").string() << "\n";
  }
  if (!a.reports.empty()) {
    std::vector<std::pair<std::string, std::vector<double>>> curves;
    for (const auto& r : a.reports) {
      const json j = read_json_file(r);
      curves.emplace_back(r, j.at("cmc_curve").get<std::vector<double>>());
    }
    write_png(out / "cmc.png", viz::cmc_plot(curves));
    std::cout << (out / "cmc.png").string() << "\n";
  }
  if (!a.checkpoint.empty()) {
    require_config(!a.data.empty(), "--checkpoint needs --data");
    require_config(a.samples > 0, "--samples must be positive");
    const auto ck = model::load_checkpoint(a.checkpoint);
    auto m = model::model_from_checkpoint(ck);
    require_config(m.has_decoder(), "checkpoint has no decoder; texture grid needs one");
    const auto manifest = datagen::load_manifest(a.data);
    const auto split = datagen::load_split(manifest, datagen::parse_split(a.split), true);
    const int n = std::min(a.samples, split.images.n());
    require_input(n > 0, "split '" + a.split + "' is empty");
    std::vector<int> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i * split.images.n() / n;
    const auto res = m.forward(split.images.gather(rows), model::Pass::kEval);
    std::vector<viz::GridRow> grid;
    for (int i = 0; i < n; ++i) {
      grid.push_back({tensor_to_image(split.images, rows[static_cast<std::size_t>(i)]),
                      tensor_to_image(res.decoded->texture, i),
                      tensor_to_image(split.textures, rows[static_cast<std::size_t>(i)])});
    }
    write_png(out / "texture_grid.png", viz::texture_grid(grid));
    std::cout << (out / "texture_grid.png").string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Semantics-aligned person re-identification toolkit"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  DatagenArgs dg;
  auto* c_dg = app.add_subcommand("datagen", "Generate a synthetic person/texture dataset");
  add_common(c_dg, dg.common);
  c_dg->add_option("--out", dg.out, "Dataset directory")->required();
  c_dg->add_option("--ids", dg.ids, "Train identities");
  c_dg->add_option("--views", dg.views, "Views per train identity");
  c_dg->add_option("--test-ids", dg.test_ids, "Test identities");
  c_dg->add_option("--test-views", dg.test_views, "Views per test identity");
  c_dg->add_option("--query-views", dg.query_views, "Views per test identity used as queries");
  c_dg->add_flag("--paper-scale", dg.paper_scale, "256x128 images and 256x256 textures");

  TrainArgs pg;
  auto* c_pg = app.add_subcommand("train-pg", "Train the pseudo-groundtruth generator on synthetic pairs");
  add_common(c_pg, pg.common);
  c_pg->add_option("--pit", pg.pit, "Synthetic paired dataset")->required()->check(CLI::ExistingDirectory);
  c_pg->add_option("--out", pg.out, "Run directory")->required();
  c_pg->add_option("--steps", pg.steps, "Training steps");
  c_pg->add_option("--lr", pg.lr, "Learning rate");
  c_pg->add_option("--checkpoint-every", pg.checkpoint_every, "Periodic checkpoint cadence (steps)");
  c_pg->add_option("--resume", pg.resume, "Resume from a checkpoint")->check(CLI::ExistingFile);

  PseudoArgs ps;
  auto* c_ps = app.add_subcommand("pseudo-gt", "Predict pseudo groundtruth textures for a reID train split");
  add_common(c_ps, ps.common);
  c_ps->add_option("--checkpoint", ps.checkpoint, "SAN-PG checkpoint")->required()->check(CLI::ExistingFile);
  c_ps->add_option("--reid", ps.reid, "reID dataset")->required()->check(CLI::ExistingDirectory);
  c_ps->add_option("--out", ps.out, "Store directory")->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Joint reID training (step 2) or the encoder-only baseline");
  add_common(c_tr, tr.common);
  c_tr->add_option("--reid", tr.reid, "reID dataset")->required()->check(CLI::ExistingDirectory);
  c_tr->add_option("--pseudo-store", tr.pseudo_store, "Pseudo groundtruth store (required unless --baseline)");
  c_tr->add_option("--init", tr.init, "SAN-PG checkpoint (default: the one recorded in the store)");
  c_tr->add_option("--pit", tr.pit, "Synthetic paired dataset (default: the one recorded in the store)");
  c_tr->add_option("--out", tr.out, "Run directory")->required();
  c_tr->add_option("--steps", tr.steps, "Training steps");
  c_tr->add_option("--lr", tr.lr, "Learning rate");
  c_tr->add_option("--checkpoint-every", tr.checkpoint_every, "Periodic checkpoint cadence (steps)");
  c_tr->add_option("--resume", tr.resume, "Resume from a checkpoint")->check(CLI::ExistingFile);
  c_tr->add_flag("--no-syn", tr.no_syn, "Do not interleave synthetic batches");
  c_tr->add_flag("--no-tr", tr.no_tr, "Drop the decoder-feature triplet constraint");
  c_tr->add_flag("--baseline", tr.baseline, "Encoder only: identity and triplet losses");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Query/gallery retrieval metrics for a checkpoint");
  add_common(c_ev, ev.common);
  c_ev->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--data", ev.data, "Dataset with query and gallery splits")->required()->check(CLI::ExistingDirectory);
  c_ev->add_option("--distance", ev.distance, "euclidean or cosine");
  c_ev->add_option("--partial", ev.partial, "Crop queries to this fraction of their height");
  c_ev->add_option("--partial-max", ev.partial_max, "Upper crop fraction; crops drawn uniformly in [partial, max]");
  c_ev->add_flag("--l2-normalize", ev.l2_normalize, "L2-normalize embeddings before ranking");
  c_ev->add_option("--out", ev.out, "Report file (default: stdout)");

  AblateArgs ab;
  auto* c_ab = app.add_subcommand("ablate", "Train and evaluate the five comparison variants over several seeds");
  add_common(c_ab, ab.common);
  c_ab->add_option("--out", ab.out, "Work directory")->required();
  c_ab->add_option("--seeds", ab.seeds, "Number of seeds (starting at --seed, default 0)");
  c_ab->add_option("--steps", ab.steps, "reID batches per run");
  c_ab->add_option("--pg-steps", ab.pg_steps, "SAN-PG training steps");
  c_ab->add_option("--lr", ab.lr, "Learning rate for both training stages");
  c_ab->add_option("--variant", ab.variants, "Restrict to these variants (repeatable)");
  c_ab->add_option("--distance", ab.distance, "euclidean or cosine");

  VerifyArgs vf;
  auto* c_vf = app.add_subcommand("verify", "Run loss/metric oracles and gradient checks");
  add_common(c_vf, vf.common);
  c_vf->add_option("--instances", vf.instances, "Random instances per oracle check");
  c_vf->add_option("--inject-margin", vf.inject_margin, "Hand this margin to the library constraint (mutation check)");
  c_vf->add_option("--out", vf.out, "JSON report file");

  PlotArgs pl;
  auto* c_pl = app.add_subcommand("plot", "Render loss curves, CMC curves and texture grids");
  add_common(c_pl, pl.common);
  c_pl->add_option("--out", pl.out, "Figure directory")->required();
  c_pl->add_option("--log", pl.log, "Loss log (JSON lines)")->check(CLI::ExistingFile);
  c_pl->add_option("--report", pl.reports, "Metrics report (repeatable)")->check(CLI::ExistingFile);
  c_pl->add_option("--checkpoint", pl.checkpoint, "Checkpoint with a decoder")->check(CLI::ExistingFile);
  c_pl->add_option("--data", pl.data, "Dataset for the texture grid")->check(CLI::ExistingDirectory);
  c_pl->add_option("--split", pl.split, "Split for the texture grid");
  c_pl->add_option("--samples", pl.samples, "Rows in the texture grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_dg->parsed()) return cmd_datagen(dg);
    if (c_pg->parsed()) return cmd_train_pg(pg);
    if (c_ps->parsed()) return cmd_pseudo_gt(ps);
    if (c_tr->parsed()) return cmd_train(tr);
    if (c_ev->parsed()) return cmd_eval(ev);
    if (c_ab->parsed()) return cmd_ablate(ab);
    if (c_vf->parsed()) return cmd_verify(vf);
    if (c_pl->parsed()) return cmd_plot(pl);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
