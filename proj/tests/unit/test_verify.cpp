// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "san/verify/verify.hpp"

using namespace san;
using namespace san::verify;

TEST_CASE("verification passes on the shipped library", "[verify]") {
  const VerifyReport r = run_verify();
  for (const auto& c : r.checks) {
    INFO(c.family << "/" << c.name << " max error " << c.max_error << " " << c.detail);
    CHECK(c.passed);
  }
  REQUIRE(r.passed());
  REQUIRE(r.families().size() >= 6);

  const json j = to_json(r, VerifyOptions{});
  REQUIRE(j["passed"] == true);
  REQUIRE(j["checks"].size() == r.checks.size());
}

TEST_CASE("a wrong margin is caught by the constraint checks", "[verify]") {
  VerifyOptions opts;
  opts.injected_tr_margin = 0.35;
  REQUIRE_FALSE(check_eq1_hand_values(opts).passed);
  REQUIRE_FALSE(check_tr_oracle(opts).passed);
  REQUIRE(check_id_loss_oracle(opts).passed);
}

TEST_CASE("oracle checks cover at least 200 instances", "[verify]") {
  VerifyOptions opts;
  for (const auto& c : {check_id_loss_oracle(opts), check_triplet_oracle(opts), check_reconstruction_oracle(opts),
                        check_tr_oracle(opts)})
    REQUIRE(c.instances >= 200);
  for (const auto& c : check_metric_oracles(opts)) REQUIRE(c.instances >= 200);
}

TEST_CASE("relative error and central differences", "[verify]") {
  REQUIRE(detail::relative_error({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  const auto g = detail::central_difference([](const std::vector<double>& x) { return x[0] * x[0] + 3 * x[1]; },
                                            {2.0, -1.0}, kFdEpsilon);
  REQUIRE(g[0] == Catch::Approx(4.0).margin(1e-8));
  REQUIRE(g[1] == Catch::Approx(3.0).margin(1e-8));
}
