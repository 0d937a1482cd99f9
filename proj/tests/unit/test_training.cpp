// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <map>
#include <set>

#include "san/training/ablation.hpp"
#include "san/training/trainer.hpp"
#include "support.hpp"

using namespace san;
using namespace san::training;

namespace {

datagen::DatasetConfig small_reid() {
  datagen::DatasetConfig c;
  c.train_ids = 5;
  c.train_views = 4;
  c.test_ids = 3;
  c.test_views = 3;
  c.query_views = 1;
  return c;
}

datagen::DatasetConfig small_pit() {
  datagen::DatasetConfig c = small_reid();
  c.seed = 1001;
  c.test_ids = 0;
  return c;
}

// Datasets, a short SAN-PG run and its pseudo groundtruth, built once per process.
struct Fixture {
  fs::path root = test::scratch_dir("training_fixture");
  datagen::DatasetManifest reid = datagen::generate_dataset(small_reid(), root / "reid");
  datagen::DatasetManifest pit = datagen::generate_dataset(small_pit(), root / "pit");
  TrainResult pg = [&] {
    TrainConfig c;
    c.steps = 4;
    return train_san_pg(pit, c);
  }();
  PseudoGTStore store = generate_pseudo_gt(pg.model, reid, root / "pgt");
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

RunHooks hooks(const fs::path& dir, const model::Checkpoint* resume) {
  RunHooks h;
  h.checkpoint_dir = dir;
  h.resume = resume;
  return h;
}

TrainConfig joint(int steps, bool syn, bool tr) {
  TrainConfig c;
  c.steps = steps;
  c.use_syn = syn;
  c.use_tr = tr;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("PK batches hold P identities with K samples each", "[training]") {
  std::vector<int> ids;
  for (int id = 0; id < 10; ++id)
    for (int v = 0; v < 6; ++v) ids.push_back(id);
  const auto groups = group_by_identity(ids);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto batch = sample_pk_batch(groups, PKBatchSpec{}, rng);
    REQUIRE(batch.size() == 16);
    std::map<int, std::set<int>> rows_per_id;
    for (int r : batch) rows_per_id[ids[static_cast<std::size_t>(r)]].insert(r);
    REQUIRE(rows_per_id.size() == 4);
    for (const auto& [id, rows] : rows_per_id) REQUIRE(rows.size() == 4);
  }
}

TEST_CASE("small identities are topped up with replacement", "[training]") {
  const std::vector<int> ids{0, 0, 1, 1, 1, 1};
  const auto groups = group_by_identity(ids);
  Rng rng(2);
  const auto batch = sample_pk_batch(groups, PKBatchSpec{2, 4}, rng);
  std::map<int, int> count;
  std::set<int> rows_of_zero;
  for (int r : batch) {
    ++count[ids[static_cast<std::size_t>(r)]];
    if (ids[static_cast<std::size_t>(r)] == 0) rows_of_zero.insert(r);
  }
  REQUIRE(count[0] == 4);
  REQUIRE(count[1] == 4);
  REQUIRE(rows_of_zero == std::set<int>{0, 1});
}

TEST_CASE("PK sampling is seeded and needs P identities", "[training]") {
  std::vector<int> ids;
  for (int id = 0; id < 6; ++id)
    for (int v = 0; v < 5; ++v) ids.push_back(id);
  const auto groups = group_by_identity(ids);
  Rng a(9), b(9);
  for (int t = 0; t < 10; ++t) REQUIRE(sample_pk_batch(groups, PKBatchSpec{}, a) == sample_pk_batch(groups, PKBatchSpec{}, b));

  const std::vector<int> three{0, 1, 2};
  Rng rng(1);
  REQUIRE_THROWS_AS(sample_pk_batch(group_by_identity(three), PKBatchSpec{}, rng), DataError);
}

TEST_CASE("constraint triplets are valid and uniformly spread", "[training]") {
  const std::vector<int> labels{4, 4, 8, 8};
  Rng rng(3);
  const auto triples = select_tr_triplets(labels, rng);
  REQUIRE(triples.size() == 4);
  for (const auto& t : triples) {
    REQUIRE(t.anchor != t.positive);
    REQUIRE(labels[static_cast<std::size_t>(t.anchor)] == labels[static_cast<std::size_t>(t.positive)]);
    REQUIRE(labels[static_cast<std::size_t>(t.anchor)] != labels[static_cast<std::size_t>(t.negative)]);
  }
  Rng r1(5), r2(5);
  REQUIRE(select_tr_triplets(labels, r1) == select_tr_triplets(labels, r2));

  const std::vector<int> pk{0, 0, 0, 0, 1, 1, 1, 1};
  std::set<std::pair<int, int>> seen;
  Rng many(6);
  for (int t = 0; t < 1000; ++t)
    for (const auto& tr : select_tr_triplets(pk, many)) seen.insert({tr.anchor, tr.positive});
  REQUIRE(seen.size() == 8 * 3);

  const std::vector<int> lonely{0, 1, 1};
  REQUIRE_THROWS_AS(select_tr_triplets(lonely, rng), InputError);
}

TEST_CASE("interleaving alternates reID and synthetic batches", "[training]") {
  TrainConfig c = joint(10, true, true);
  for (int s = 0; s < 10; ++s) REQUIRE(c.kind_at(s) == (s % 2 == 0 ? BatchKind::kReid : BatchKind::kSynthetic));
  REQUIRE(c.weights(BatchKind::kReid) == losses::LossWeights::reid());
  REQUIRE(c.weights(BatchKind::kSynthetic) == losses::LossWeights::synthetic());

  TrainConfig no_syn = joint(10, false, true);
  for (int s = 0; s < 10; ++s) REQUIRE(no_syn.kind_at(s) == BatchKind::kReid);
  REQUIRE(joint(1, false, false).weights(BatchKind::kReid).tr == 0.0);

  TrainConfig base = joint(1, false, false);
  base.with_decoder = false;
  REQUIRE(base.weights(BatchKind::kReid) == losses::LossWeights{0.5, 1.5, 0.0, 0.0});
}

TEST_CASE("flags map to variant labels", "[training]") {
  REQUIRE(joint(1, true, true).variant() == "SAN");
  REQUIRE(joint(1, false, true).variant() == "SAN w/ L_TR");
  REQUIRE(joint(1, true, false).variant() == "SAN w/ syn. data");
  REQUIRE(joint(1, false, false).variant() == "SAN-basic");
  TrainConfig base = joint(1, false, false);
  base.with_decoder = false;
  REQUIRE(base.variant() == "Baseline");
}

TEST_CASE("SAN-PG logs reconstruction-only weights", "[training]") {
  const auto& f = fixture();
  REQUIRE(f.pg.log.size() == 4);
  for (const auto& l : f.pg.log) {
    REQUIRE(l.kind == BatchKind::kSynthetic);
    REQUIRE(l.report.weights == losses::LossWeights::synthetic());
    REQUIRE(l.report.total == l.report.components.rec);
  }
}

TEST_CASE("pseudo groundtruth store covers every train image", "[training]") {
  auto& f = fixture();
  REQUIRE(f.store.entries.size() == f.reid.split(datagen::Split::kTrain).size());
  const PseudoGTStore loaded = load_pseudo_gt(f.root / "pgt");
  REQUIRE(loaded.entries == f.store.entries);
  const Image t = read_png(loaded.root / loaded.entries.begin()->second);
  REQUIRE(t.height() == 64);
  REQUIRE(t.width() == 64);

  generate_pseudo_gt(f.pg.model, f.reid, f.root / "pgt_again");
  for (const auto& [id, rel] : f.store.entries)
    REQUIRE(test::slurp(f.root / "pgt" / rel) == test::slurp(f.root / "pgt_again" / rel));

  PseudoGTStore partial = f.store;
  partial.entries.erase(partial.entries.begin());
  REQUIRE_THROWS_AS(require_complete(partial, f.reid), DataError);
  REQUIRE_THROWS_AS(train_san(f.reid, &partial, &f.pit, joint(2, false, false), &f.pg.final_checkpoint), DataError);
}

TEST_CASE("logged totals use the fixed weights", "[training]") {
  auto& f = fixture();
  const TrainResult r = train_san(f.reid, &f.store, &f.pit, joint(6, true, true), &f.pg.final_checkpoint);
  REQUIRE(r.log.size() == 6);
  for (const auto& l : r.log) {
    const auto& c = l.report.components;
    if (l.kind == BatchKind::kReid) {
      REQUIRE(l.report.total == 0.5 * c.id + 1.5 * c.triplet + 1.0 * c.rec + 1.0 * c.tr);
      REQUIRE(c.tr > 0.0);
    } else {
      REQUIRE(l.report.total == c.rec);
    }
  }
}

TEST_CASE("baseline trains no decoder", "[training]") {
  auto& f = fixture();
  TrainConfig c = joint(3, false, false);
  c.with_decoder = false;
  const TrainResult r = train_san(f.reid, nullptr, nullptr, c, nullptr);
  REQUIRE(r.model.decoder_parameter_count() == 0);
  for (const auto& l : r.log) {
    REQUIRE(l.report.components.rec == 0.0);
    REQUIRE(l.report.components.tr == 0.0);
  }
}

TEST_CASE("resuming reproduces the uninterrupted run", "[training]") {
  auto& f = fixture();
  const fs::path dir = test::scratch_dir("training_resume");
  TrainConfig c = joint(6, true, true);
  c.checkpoint_every = 3;
  const TrainResult full =
      train_san(f.reid, &f.store, &f.pit, c, &f.pg.final_checkpoint, hooks(dir, nullptr));
  const model::Checkpoint mid = model::load_checkpoint(dir / "step_3.ckpt");
  REQUIRE(mid.step == 3);
  const TrainResult resumed = train_san(f.reid, &f.store, &f.pit, c, &f.pg.final_checkpoint,
                                        hooks({}, &mid));
  REQUIRE(resumed.log.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    REQUIRE(to_json_line(resumed.log[i]).dump() == to_json_line(full.log[i + 3]).dump());

  TrainConfig pg = joint(4, false, false);
  pg.checkpoint_every = 2;
  const fs::path pg_dir = test::scratch_dir("training_resume_pg");
  const TrainResult pg_full = train_san_pg(f.pit, pg, hooks(pg_dir, nullptr));
  const model::Checkpoint pg_mid = model::load_checkpoint(pg_dir / "step_2.ckpt");
  const TrainResult pg_resumed =
      train_san_pg(f.pit, pg, hooks({}, &pg_mid));
  for (std::size_t i = 0; i < 2; ++i)
    REQUIRE(to_json_line(pg_resumed.log[i]).dump() == to_json_line(pg_full.log[i + 2]).dump());
}

TEST_CASE("same seed gives identical runs", "[training]") {
  auto& f = fixture();
  const TrainResult a = train_san(f.reid, &f.store, &f.pit, joint(4, true, true), &f.pg.final_checkpoint);
  const TrainResult b = train_san(f.reid, &f.store, &f.pit, joint(4, true, true), &f.pg.final_checkpoint);
  for (std::size_t i = 0; i < a.log.size(); ++i) REQUIRE(to_json_line(a.log[i]).dump() == to_json_line(b.log[i]).dump());
  REQUIRE(a.final_checkpoint.tensors == b.final_checkpoint.tensors);
}

TEST_CASE("log lines round trip through JSON", "[training]") {
  LossLogLine l;
  l.step = 17;
  l.kind = BatchKind::kSynthetic;
  l.report = losses::make_report({0.0, 0.0, 0.125, 0.0}, losses::LossWeights::synthetic());
  const LossLogLine back = parse_log_line(to_json_line(l));
  REQUIRE(back.step == 17);
  REQUIRE(back.kind == BatchKind::kSynthetic);
  REQUIRE(back.report.total == 0.125);
  REQUIRE(back.report.weights == losses::LossWeights::synthetic());
}

TEST_CASE("ablation variants and step accounting", "[training]") {
  AblationConfig cfg;
  const auto& v = ablation_variants();
  REQUIRE(v.size() == 5);
  REQUIRE(v[0].name == "Baseline");
  REQUIRE_FALSE(v[0].with_decoder);
  REQUIRE(variant_slug("SAN w/ syn. data") == "san_w_syn_data");
  REQUIRE(cfg.run_config(v[1], 0).steps == cfg.joint.steps);
  REQUIRE(cfg.run_config(v[3], 0).steps == 2 * cfg.joint.steps);
  for (const auto& spec : v) REQUIRE(cfg.run_config(spec, 0).variant() == spec.name);

  cfg.variants = {"SAN-basic", "nope"};
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("a miniature ablation writes every run", "[training]") {
  const fs::path root = test::scratch_dir("training_ablation");
  AblationConfig cfg;
  cfg.reid = small_reid();
  cfg.pit = small_pit();
  cfg.pg.steps = 2;
  cfg.joint.steps = 2;
  cfg.seeds = {0, 1};
  const AblationResult r = run_ablation(cfg, root);
  REQUIRE(r.rows.size() == 5);
  for (const auto& row : r.rows) {
    REQUIRE(row.runs.size() == 2);
    for (const auto& run : row.runs) {
      const fs::path dir = root / "runs" / variant_slug(row.variant) / ("seed_" + std::to_string(run.seed));
      REQUIRE(fs::exists(dir / "metrics.json"));
      REQUIRE(fs::exists(dir / "loss_log.jsonl"));
    }
  }
  REQUIRE(r.row("Baseline")->runs[0].decoder_parameters_trained == 0);
  REQUIRE(r.row("SAN")->runs[0].steps == 4);
  const std::string md = to_markdown(r);
  REQUIRE(std::count(md.begin(), md.end(), '\n') == 7);
  const json j = training::to_json(r, json());
  REQUIRE(j["rows"].size() == 5);
  REQUIRE(j["rows"][0]["runs"].size() == 2);
}
