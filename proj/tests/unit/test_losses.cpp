// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "san/losses/losses.hpp"
#include "san/verify/oracles.hpp"
#include "san/verify/verify.hpp"

using namespace san;
using namespace san::losses;
namespace oracle = san::verify::oracle;

namespace {

template <typename T>
std::span<const T> view(const std::vector<T>& v) {
  return v;
}

}  // namespace

TEST_CASE("identity loss hand values", "[losses]") {
  const std::vector<double> uniform(10, 0.25);
  const std::vector<int> label{3};
  REQUIRE(id_loss<double>(uniform, 1, 10, label).value == Catch::Approx(std::log(10.0)).margin(1e-12));

  std::vector<double> confident(10, 0.0);
  confident[3] = 50.0;
  REQUIRE(id_loss<double>(confident, 1, 10, label).value <= 1e-6);

  const std::vector<int> bad{10};
  REQUIRE_THROWS_AS(id_loss<double>(uniform, 1, 10, bad), InputError);
  REQUIRE_THROWS_AS(id_loss<double>({}, 0, 10, {}), InputError);
}

TEST_CASE("identity loss matches the softmax-sum oracle", "[losses]") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const int b = uniform_int(rng, 1, 16), c = uniform_int(rng, 2, 32);
    std::vector<double> logits(static_cast<std::size_t>(b * c));
    for (double& v : logits) v = uniform(rng, -5, 5);
    std::vector<int> labels(static_cast<std::size_t>(b));
    for (int& l : labels) l = uniform_int(rng, 0, c - 1);
    REQUIRE(id_loss<double>(logits, b, c, labels).value ==
            Catch::Approx(oracle::id_loss(logits, b, c, labels)).margin(1e-9));
  }
}

TEST_CASE("batch-hard triplet hand values", "[losses]") {
  const std::vector<int> labels{0, 0, 1, 1};
  const std::vector<double> same(4 * 3, 0.7);
  REQUIRE(batch_hard_triplet<double>(same, 4, 3, labels, 0.3).value == Catch::Approx(0.3).margin(1e-12));

  const std::vector<double> separated{0.0, 0.2, 1.0, 1.1};
  REQUIRE(batch_hard_triplet<double>(separated, 4, 1, labels, 0.3).value == Catch::Approx(0.0).margin(1e-12));

  const std::vector<double> tangled{0.0, 1.0, 0.5, 0.6};
  REQUIRE(batch_hard_triplet<double>(tangled, 4, 1, labels, 0.3).value == Catch::Approx(0.425).margin(1e-12));
  REQUIRE(oracle::batch_hard_triplet(tangled, 4, 1, labels, 0.3) == Catch::Approx(0.425).margin(1e-12));
}

TEST_CASE("batch-hard triplet needs two identities", "[losses]") {
  const std::vector<double> e{0.0, 1.0, 2.0};
  const std::vector<int> one{4, 4, 4};
  REQUIRE_THROWS_AS(batch_hard_triplet<double>(e, 3, 1, one, 0.3), InputError);
}

TEST_CASE("reconstruction loss hand values", "[losses]") {
  Rng rng(2);
  std::vector<double> target(48);
  for (double& v : target) v = uniform(rng, 0, 1);
  REQUIRE(reconstruction_loss<double>(target, target).value == 0.0);

  std::vector<double> shifted = target;
  for (double& v : shifted) v += 0.5;
  REQUIRE(reconstruction_loss<double>(shifted, target).value == Catch::Approx(0.5).margin(1e-12));

  std::vector<double> pred(48);
  for (double& v : pred) v = uniform(rng, 0, 1);
  REQUIRE(reconstruction_loss<double>(pred, target).value ==
          Catch::Approx(oracle::reconstruction_loss(pred, target)).margin(1e-7));

  REQUIRE_THROWS_AS(reconstruction_loss<double>(view(pred), view(std::vector<double>(47))), InputError);
}

TEST_CASE("decoder-feature triplet constraint hand values", "[losses]") {
  const std::vector<double> same{0.4, -1.0, 2.0, 0.1};
  REQUIRE(triplet_reid_constraint<double>(same, same, same, 2, 0.3).value == Catch::Approx(0.3).margin(1e-12));

  const std::vector<double> a1{0.0}, p1{2.0}, n1{1.0};
  REQUIRE(std::abs(triplet_reid_constraint<double>(a1, p1, n1, 1, 0.3).value - 3.3) <= 1e-7);

  const std::vector<double> a2{0.0, 0.0}, p2{1.0, 1.0}, n2{2.0, 2.0};
  const auto r = triplet_reid_constraint<double>(a2, p2, n2, 2, 0.3);
  REQUIRE(r.value == 0.0);
  REQUIRE(r.pre_hinge == Catch::Approx(-2.7));

  REQUIRE_THROWS_AS(triplet_reid_constraint<double>(a2, p1, n2, 2, 0.3), InputError);
}

TEST_CASE("constraint is averaged over blocks", "[losses]") {
  const std::vector<double> blocks{0.0, 0.0, 3.3};
  REQUIRE(std::abs(tr_loss_over_blocks<double>(blocks) - 1.1) <= 1e-7);
  const std::vector<double> margins{0.3, 0.3, 0.3};
  REQUIRE(tr_loss_over_blocks<double>(margins) == Catch::Approx(0.3));

  const std::vector<double> taps(4 * 2, 1.25);
  const std::vector<TapBatch<double>> three{{taps, 4, 2}, {taps, 4, 2}, {taps, 4, 2}};
  const std::vector<Triple> triples{{0, 1, 2}, {1, 0, 3}, {2, 3, 0}, {3, 2, 1}};
  const auto r = tr_batch_loss<double>(three, triples, 0.3);
  REQUIRE(r.value == Catch::Approx(0.3));
  REQUIRE(r.block_values.size() == 3);
}

TEST_CASE("weighted total", "[losses]") {
  const LossComponents ones{1, 1, 1, 1};
  REQUIRE(total_loss(ones, LossWeights::reid()) == 4.0);
  REQUIRE(total_loss({7, 9, 2, 5}, LossWeights::synthetic()) == 2.0);
  REQUIRE(total_loss({0, 0, 0, 0}, LossWeights::reid()) == 0.0);
  REQUIRE_THROWS_AS(total_loss(ones, LossWeights{-1, 0, 0, 0}), ConfigError);
}

TEST_CASE("library losses agree with brute-force oracles", "[losses]") {
  verify::VerifyOptions opts;
  for (const auto& c : {verify::check_id_loss_oracle(opts), verify::check_triplet_oracle(opts),
                        verify::check_reconstruction_oracle(opts), verify::check_tr_oracle(opts)}) {
    INFO(c.name << " max error " << c.max_error);
    REQUIRE(c.instances >= 200);
    REQUIRE(c.passed);
  }
}

TEST_CASE("analytic loss gradients agree with central differences", "[losses]") {
  verify::VerifyOptions opts;
  for (const auto& c : verify::check_loss_gradients(opts)) {
    INFO(c.name << " max error " << c.max_error);
    REQUIRE(c.passed);
  }
}
