// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: prints one PASS/FAIL line per criterion and exits non-zero if any fails.

#include <sys/wait.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "san/core/runtime.hpp"
#include "san/datagen/alignment.hpp"
#include "san/eval/evaluate.hpp"
#include "san/training/ablation.hpp"
#include "san/verify/verify.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace san;
using json = nlohmann::ordered_json;

namespace {

constexpr double kAblationBudgetSeconds = 1800.0;
constexpr double kMinRank1Gain = 0.02;
constexpr double kPgShrink = 0.7;
constexpr int kPgCheckStep = 500;
constexpr int kWeightingSteps = 200;

struct Outcome {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void report(int id, std::string title, bool passed, std::string detail) {
  std::printf("%s  %2d  %s  [%s]\n", passed ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  g_outcomes.push_back({id, std::move(title), passed, std::move(detail)});
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

bool all_passed(const std::vector<verify::CheckResult>& checks, std::string& detail) {
  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.passed;
    if (!detail.empty()) detail += "; ";
    detail += c.name + " n=" + std::to_string(c.instances) + " err=" + fmt("%.2e", c.max_error) +
              (c.passed ? "" : " FAILED");
  }
  return ok;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SAN_CLI_PATH) + " " + args + " >>" + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// ----------------------------------------------------------------------------- 1

std::optional<training::AblationResult> criterion_ablation(const fs::path& root) {
  training::AblationConfig cfg;
  std::cerr << "running the ablation (" << cfg.seeds.size() << " seeds x 5 variants) in " << root << "\n";
  fs::remove_all(root);
  const json rc{{"tool", kToolName}, {"tool_version", kToolVersion}, {"ablation", cfg}};
  const auto result = training::run_ablation(cfg, root, rc, [](const std::string& m) { std::cerr << "  " << m << "\n"; });
  training::write_json(root / "ablation.json", training::to_json(result, rc));
  std::ofstream(root / "ablation.md") << training::to_markdown(result);

  const double base = result.row("Baseline")->mean_cmc1();
  const double basic = result.row("SAN-basic")->mean_cmc1();
  const double full = result.row("SAN")->mean_cmc1();
  std::string table;
  for (const auto& row : result.rows) table += (table.empty() ? "" : ", ") + row.variant + fmt(" %.3f", row.mean_cmc1());
  const bool gain = basic - base >= kMinRank1Gain;
  const bool order = full >= basic;
  const bool budget = result.total_seconds <= kAblationBudgetSeconds;
  report(1, "ablation direction of effect", gain && order && budget,
         "mean CMC@1 " + table + fmt("; SAN-basic - Baseline = %+.3f (need >= 0.02); SAN - SAN-basic = %+.3f; runtime %.0f s (limit 1800)",
                                     basic - base, full - basic, result.total_seconds));

  const auto smooth = training::smoothed_rec(result.pg_log);
  if (smooth.size() >= static_cast<std::size_t>(kPgCheckStep)) {
    const double first = smooth.front(), at = smooth[kPgCheckStep - 1], last = smooth.back();
    const bool ok = at < kPgShrink * first && last < kPgShrink * first;
    std::printf("%s   -  SAN-PG smoothed L_Rec shrinks below 0.7x  [initial %.4f, step %d %.4f, final %.4f]\n",
                ok ? "PASS" : "FAIL", first, kPgCheckStep, at, last);
    g_outcomes.push_back({0, "SAN-PG reconstruction postcondition", ok, ""});
  }
  return result;
}

// ----------------------------------------------------------------------------- 2-5

void criteria_oracles() {
  verify::VerifyOptions opts;
  opts.instances = 200;

  {
    const auto c = verify::check_eq1_hand_values(opts);
    report(2, "decoder-feature triplet constraint hand values", c.passed,
           fmt("coincident taps 0.3, cases 3.3 and 0, block mean 1.1; max error %.2e (tol 1e-7)", c.max_error));
  }
  {
    std::string detail;
    const bool ok = all_passed({verify::check_id_loss_oracle(opts), verify::check_triplet_oracle(opts),
                                verify::check_reconstruction_oracle(opts), verify::check_tr_oracle(opts)},
                               detail);
    report(3, "loss oracle equivalence (tol 1e-6)", ok, detail);
  }
  {
    std::string detail;
    const bool ok = all_passed(verify::check_loss_gradients(opts), detail);
    report(4, "loss gradients vs central differences (eps 1e-4, tol 1e-4)", ok, detail);
  }
  {
    std::string detail;
    const bool ok = all_passed(verify::check_metric_oracles(opts), detail);
    report(5, "metric oracle equivalence (CMC exact, mAP 1e-9, AP 5/6)", ok, detail);
  }
}

// ----------------------------------------------------------------------------- 6

void criterion_weighting(const fs::path& ablation_root, const fs::path& work) {
  const fs::path root = work / "weighting";
  fs::remove_all(root);
  datagen::DatasetManifest reid, pit;
  model::Checkpoint pg;
  training::PseudoGTStore store;
  if (fs::exists(ablation_root / "pg" / "final.ckpt") && fs::exists(ablation_root / "pseudo_gt" / "store.jsonl")) {
    reid = datagen::load_manifest(ablation_root / "data" / "reid");
    pit = datagen::load_manifest(ablation_root / "data" / "pit");
    pg = model::load_checkpoint(ablation_root / "pg" / "final.ckpt");
    store = training::load_pseudo_gt(ablation_root / "pseudo_gt");
  } else {
    reid = datagen::generate_dataset(datagen::DatasetConfig{}, root / "reid");
    pit = datagen::generate_dataset(training::default_pit_config(), root / "pit");
    training::TrainConfig pc;
    pc.steps = 50;
    auto res = training::train_san_pg(pit, pc);
    pg = res.final_checkpoint;
    store = training::generate_pseudo_gt(res.model, reid, root / "pseudo_gt");
  }

  training::TrainConfig cfg;
  cfg.steps = kWeightingSteps;
  cfg.seed = 11;
  fs::create_directories(root);
  {
    std::ofstream log(root / "loss_log.jsonl", std::ios::binary);
    training::RunHooks hooks;
    hooks.log = &log;
    training::train_san(reid, &store, &pit, cfg, &pg, hooks);
  }

  std::ifstream is(root / "loss_log.jsonl");
  std::string line;
  int lines = 0, reid_steps = 0, syn_steps = 0, mismatches = 0;
  while (std::getline(is, line)) {
    const json j = json::parse(line);
    ++lines;
    const double id = j["l_id"], tri = j["l_tri"], rec = j["l_rec"], tr = j["l_tr"], total = j["total"];
    const auto w = j["weights"].get<std::vector<double>>();
    double expected = 0;
    std::vector<double> expected_w;
    if (j["kind"] == "reid") {
      ++reid_steps;
      expected = 0.5 * id + 1.5 * tri + 1.0 * rec + 1.0 * tr;
      expected_w = {0.5, 1.5, 1.0, 1.0};
    } else {
      ++syn_steps;
      expected = rec;
      expected_w = {0.0, 0.0, 1.0, 0.0};
    }
    if (total != expected || w != expected_w) ++mismatches;
  }
  report(6, "weighting fidelity over a full run", lines == kWeightingSteps && mismatches == 0 && reid_steps > 0 && syn_steps > 0,
         std::to_string(lines) + " logged steps (" + std::to_string(reid_steps) + " reID, " + std::to_string(syn_steps) +
             " synthetic), " + std::to_string(mismatches) + " totals differ from the exact weighted sum");
}

// ----------------------------------------------------------------------------- 7-8

void criterion_shapes() {
  model::SanModel<float> m(model::ModelConfig::paper_scale());
  m.init(0);
  Tensor<float> images(1, 3, 256, 128, 0.5f);
  const auto r = m.forward(images, model::Pass::kEval);
  const auto& f = r.feature_map;
  const auto& t = r.decoded->texture;
  const double ratio = static_cast<double>(m.decoder_parameter_count()) / m.encoder_parameter_count();
  const bool ok = f.h() == 16 && f.w() == 8 && t.c() == 3 && t.h() == 256 && t.w() == 256 && ratio >= 0.2 && ratio <= 0.45;
  report(7, "paper-scale shapes and decoder/encoder size", ok,
         "f_e4 " + std::to_string(f.h()) + "x" + std::to_string(f.w()) + "x" + std::to_string(f.c()) + ", texture " +
             std::to_string(t.h()) + "x" + std::to_string(t.w()) + "x" + std::to_string(t.c()) +
             fmt(", parameter ratio %.3f (%.0f / %.0f)", ratio, static_cast<double>(m.decoder_parameter_count()),
                 static_cast<double>(m.encoder_parameter_count())));
}

void criterion_inference(const fs::path& work) {
  const fs::path root = work / "inference";
  fs::remove_all(root);
  datagen::DatasetConfig dc;
  dc.train_ids = 2;
  dc.train_views = 2;
  dc.test_ids = 10;
  const auto m = datagen::generate_dataset(dc, root);
  model::SanModel<float> model(model::ModelConfig::toy());
  model.init(0);
  model.reset_decoder_invocations();
  const auto q = datagen::load_split(m, datagen::Split::kQuery, false);
  const auto g = datagen::load_split(m, datagen::Split::kGallery, false);
  const auto eq = eval::extract_embeddings(model, q);
  const auto eg = eval::extract_embeddings(model, g);
  const std::uint64_t during = model.decoder_invocations();
  model.forward(q.images, model::Pass::kEval);
  const std::uint64_t probe = model.decoder_invocations();
  report(8, "embedding extraction runs no decoder operations", during == 0 && probe == 1 && eq.rows() == q.images.n(),
         std::to_string(eq.rows() + eg.rows()) + " embeddings, decoder counter " + std::to_string(during) +
             " (counter sanity: one eval forward -> " + std::to_string(probe) + ")");
}

// ----------------------------------------------------------------------------- 9

void criterion_determinism(const fs::path& work) {
  const fs::path root = work / "determinism";
  const fs::path run = root / "run";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "cli.log";
  const std::string small = " --ids 6 --views 4 --test-ids 4 --test-views 3 --query-views 1";
  const std::vector<std::string> artifacts{"reid/manifest.jsonl", "pit/manifest.jsonl", "pg/loss_log.jsonl",
                                           "pgt/store.jsonl",     "san/loss_log.jsonl", "metrics.json"};

  auto pipeline = [&]() {
    fs::remove_all(run);
    const auto p = [&](const std::string& rel) { return (run / rel).string(); };
    int rc = 0;
    rc |= run_cli("datagen --out " + p("reid") + small + " --seed 7", log);
    rc |= run_cli("datagen --out " + p("pit") + " --ids 6 --views 4 --test-ids 0 --seed 1001", log);
    rc |= run_cli("train-pg --pit " + p("pit") + " --out " + p("pg") + " --steps 12 --seed 3", log);
    rc |= run_cli("pseudo-gt --checkpoint " + p("pg/final.ckpt") + " --reid " + p("reid") + " --out " + p("pgt"), log);
    rc |= run_cli("train --reid " + p("reid") + " --pseudo-store " + p("pgt") + " --out " + p("san") +
                      " --steps 8 --seed 3",
                  log);
    rc |= run_cli("eval --checkpoint " + p("san/final.ckpt") + " --data " + p("reid") + " --out " + p("metrics.json"),
                  log);
    std::vector<std::string> bytes;
    for (const auto& a : artifacts) bytes.push_back(test::slurp(run / a));
    return std::make_pair(rc, bytes);
  };

  const auto first = pipeline();
  const auto second = pipeline();
  int identical = 0;
  std::string differing;
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    if (!first.second[i].empty() && first.second[i] == second.second[i]) ++identical;
    else differing += " " + artifacts[i];
  }
  report(9, "end-to-end determinism", first.first == 0 && second.first == 0 && identical == static_cast<int>(artifacts.size()),
         std::to_string(identical) + "/" + std::to_string(artifacts.size()) +
             " artifacts byte-identical (manifests, loss logs, pseudo store index, metrics report)" +
             (differing.empty() ? "" : "; differing:" + differing));
}

// ----------------------------------------------------------------------------- 10

void criterion_alignment(const fs::path& ablation_root, const fs::path& work) {
  std::vector<datagen::DatasetManifest> sets;
  if (fs::exists(ablation_root / "data" / "reid" / "manifest.jsonl")) {
    sets.push_back(datagen::load_manifest(ablation_root / "data" / "reid"));
    sets.push_back(datagen::load_manifest(ablation_root / "data" / "pit"));
  } else {
    sets.push_back(datagen::generate_dataset(datagen::DatasetConfig{}, work / "alignment" / "reid"));
    sets.push_back(datagen::generate_dataset(training::default_pit_config(), work / "alignment" / "pit"));
  }
  int ids = 0, samples = 0, geometry = 0, views = 0;
  std::string first_issue;
  for (const auto& m : sets) {
    const auto r = datagen::check_alignment(m);
    ids += r.identities;
    samples += r.samples;
    geometry += r.geometry_violations;
    views += r.view_violations;
    if (first_issue.empty() && !r.issues.empty()) first_issue = r.issues.front();
  }
  report(10, "datagen alignment invariant", geometry == 0 && views == 0 && samples > 0,
         std::to_string(ids) + " identities, " + std::to_string(samples) + " samples; " + std::to_string(geometry) +
             " geometry and " + std::to_string(views) + " view-independence violations" +
             (first_issue.empty() ? "" : "; first: " + first_issue));
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Acceptance gate"};
  std::string work = "acceptance_work";
  bool skip_ablation = false;
  app.add_option("--work", work, "Work directory");
  app.add_flag("--skip-ablation", skip_ablation, "Skip criterion 1 (reported as FAIL)");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = fs::absolute(work);
  fs::create_directories(root);
  const fs::path ablation_root = root / "ablation";
  const auto start = std::chrono::steady_clock::now();

  try {
    if (skip_ablation) {
      fs::remove_all(ablation_root);
      report(1, "ablation direction of effect", false, "skipped");
    } else {
      criterion_ablation(ablation_root);
    }
    criteria_oracles();
    criterion_weighting(ablation_root, root);
    criterion_shapes();
    criterion_inference(root);
    criterion_determinism(root);
    criterion_alignment(ablation_root, root);
  } catch (const std::exception& e) {
    std::printf("FAIL   -  aborted: %s\n", e.what());
    return 2;
  }

  int passed = 0, criteria = 0;
  bool ok = true;
  json summary = json::array();
  for (const auto& o : g_outcomes) {
    ok = ok && o.passed;
    if (o.id > 0) {
      ++criteria;
      passed += o.passed ? 1 : 0;
    }
    summary.push_back({{"criterion", o.id}, {"title", o.title}, {"passed", o.passed}, {"detail", o.detail}});
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  training::write_json(root / "acceptance.json", json{{"passed", ok}, {"seconds", seconds}, {"criteria", summary}});
  std::printf("acceptance: %d/%d criteria passed in %.0f s\n", passed, criteria, seconds);
  return ok ? 0 : 1;
}
