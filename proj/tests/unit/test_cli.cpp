// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const fs::path kRoot = san::test::scratch_dir("cli");

// Runs the CLI with stdout/stderr captured to files; returns the exit status.
int san_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(SAN_CLI_PATH) + " " + args + " >" + (kRoot / "stdout.txt").string() + " 2>" +
                          (kRoot / "stderr.txt").string();
  const int raw = std::system(cmd.c_str());
  if (out) *out = san::test::slurp(kRoot / "stdout.txt");
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string path(const std::string& rel) { return (kRoot / rel).string(); }

const std::string kSmall = " --ids 4 --views 4 --test-ids 3 --test-views 3 --query-views 1";

json read_json(const std::string& rel) { return json::parse(san::test::slurp(kRoot / rel)); }

int line_count(const std::string& rel) {
  const std::string s = san::test::slurp(kRoot / rel);
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

// Datasets, a SAN-PG checkpoint and its pseudo store shared by the cases below.
void prepare() {
  static bool done = false;
  if (done) return;
  REQUIRE(san_cli("datagen --out " + path("reid") + kSmall + " --seed 7") == 0);
  REQUIRE(san_cli("datagen --out " + path("pit") + " --ids 4 --views 4 --test-ids 0 --seed 1001") == 0);
  REQUIRE(san_cli("train-pg --pit " + path("pit") + " --out " + path("pg") + " --steps 3") == 0);
  REQUIRE(san_cli("pseudo-gt --checkpoint " + path("pg/final.ckpt") + " --reid " + path("reid") + " --out " +
                  path("pgt")) == 0);
  done = true;
}

}  // namespace

TEST_CASE("help and usage errors", "[cli]") {
  REQUIRE(san_cli("--help") == 0);
  REQUIRE(san_cli("datagen --help") == 0);
  REQUIRE(san_cli("") != 0);
  REQUIRE(san_cli("datagen --out " + path("x") + " --bogus") == 1);
  REQUIRE(san_cli("eval --checkpoint /nonexistent --data /nonexistent") == 1);
}

TEST_CASE("datagen is deterministic and validates", "[cli]") {
  REQUIRE(san_cli("datagen --out " + path("d1") + " --seed 7" + kSmall) == 0);
  REQUIRE(san_cli("datagen --out " + path("d2") + " --seed 7" + kSmall) == 0);
  REQUIRE(san::test::slurp(kRoot / "d1/manifest.jsonl") == san::test::slurp(kRoot / "d2/manifest.jsonl"));
  REQUIRE(line_count("d1/manifest.jsonl") == 1 + 16 + 9);

  REQUIRE(san_cli("datagen --out " + path("d3") + " --ids 1") != 0);
  REQUIRE(san::test::slurp(kRoot / "stderr.txt").find("identities") != std::string::npos);
}

TEST_CASE("default datagen writes 600 train rows", "[cli]") {
  REQUIRE(san_cli("datagen --out " + path("full") + " --ids 50 --views 12 --seed 7") == 0);
  const std::string m = san::test::slurp(kRoot / "full/manifest.jsonl");
  std::istringstream is(m);
  std::string line;
  std::getline(is, line);
  int train = 0;
  while (std::getline(is, line))
    if (json::parse(line)["split"] == "train") ++train;
  REQUIRE(train == 600);
}

TEST_CASE("train labels variants and logs every step", "[cli]") {
  prepare();
  REQUIRE(san_cli("train --reid " + path("reid") + " --pseudo-store " + path("pgt") + " --out " + path("basic") +
                  " --steps 3 --no-syn --no-tr") == 0);
  REQUIRE(read_json("basic/run_config.json")["train"]["variant"] == "SAN-basic");
  REQUIRE(line_count("basic/loss_log.jsonl") == 3);

  REQUIRE(san_cli("train --reid " + path("reid") + " --pseudo-store " + path("pgt") + " --out " + path("san") +
                  " --steps 4") == 0);
  REQUIRE(read_json("san/run_config.json")["train"]["variant"] == "SAN");
  REQUIRE(line_count("san/loss_log.jsonl") == 4);

  REQUIRE(san_cli("train --reid " + path("reid") + " --out " + path("base") + " --steps 2 --baseline") == 0);
  REQUIRE(read_json("base/run_config.json")["train"]["variant"] == "Baseline");

  REQUIRE(san_cli("train --reid " + path("reid") + " --out " + path("nostore") + " --steps 2") != 0);
  REQUIRE(san_cli("train --reid " + path("reid") + " --pseudo-store " + path("missing_store") + " --out " +
                  path("nostore") + " --steps 2") != 0);
}

TEST_CASE("eval reports are reproducible", "[cli]") {
  prepare();
  REQUIRE(san_cli("train --reid " + path("reid") + " --out " + path("ev") + " --steps 2 --baseline") == 0);
  const std::string base = "eval --checkpoint " + path("ev/final.ckpt") + " --data " + path("reid");
  std::string a, b;
  REQUIRE(san_cli(base, &a) == 0);
  REQUIRE(san_cli(base, &b) == 0);
  REQUIRE(a == b);
  const json report = json::parse(a);
  REQUIRE(report["cmc"]["1"].get<double>() <= report["cmc"]["5"].get<double>());
  REQUIRE(report["cmc"]["5"].get<double>() <= report["cmc"]["10"].get<double>());

  REQUIRE(san_cli(base + " --distance cosine --out " + path("cos.json")) == 0);
  REQUIRE(read_json("cos.json")["distance"] == "cosine");
  REQUIRE(san_cli(base + " --distance manhattan") != 0);
}

TEST_CASE("verify passes and catches a wrong margin", "[cli]") {
  REQUIRE(san_cli("verify --instances 200 --out " + path("verify.json")) == 0);
  const json r = read_json("verify.json");
  REQUIRE(r["passed"] == true);
  REQUIRE(r["families"].size() >= 6);
  REQUIRE(san_cli("verify --instances 200 --inject-margin 0.35") == 2);
}

TEST_CASE("plot writes figures deterministically", "[cli]") {
  prepare();
  const std::string cmd = "plot --out " + path("fig") + " --log " + path("pg/loss_log.jsonl") + " --checkpoint " +
                          path("pg/final.ckpt") + " --data " + path("reid") + " --samples 3";
  REQUIRE(san_cli(cmd) == 0);
  const std::string curves = san::test::slurp(kRoot / "fig/loss_curves.png");
  const std::string grid = san::test::slurp(kRoot / "fig/texture_grid.png");
  REQUIRE_FALSE(curves.empty());
  REQUIRE_FALSE(grid.empty());
  REQUIRE(san_cli(cmd) == 0);
  REQUIRE(san::test::slurp(kRoot / "fig/loss_curves.png") == curves);
  REQUIRE(san::test::slurp(kRoot / "fig/texture_grid.png") == grid);
}
