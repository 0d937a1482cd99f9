// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "san/core/random.hpp"
#include "san/eval/metrics.hpp"
#include "san/losses/losses.hpp"
#include "san/nn/blocks.hpp"
#include "san/nn/layers.hpp"
#include "san/verify/oracles.hpp"
#include "san/version.hpp"

namespace san::verify {

using json = nlohmann::ordered_json;

inline constexpr double kPaperMargin = 0.3;
inline constexpr double kFdEpsilon = 1e-4;

struct VerifyOptions {
  int instances = 200;
  std::uint64_t seed = 0;
  // Margin handed to the library implementation of the tap constraint; the oracle keeps 0.3.
  std::optional<double> injected_tr_margin;
};

struct CheckResult {
  std::string family;
  std::string name;
  bool passed = true;
  int instances = 0;
  double max_error = 0;
  double tolerance = 0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  std::vector<std::string> families() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (std::find(out.begin(), out.end(), c.family) == out.end()) out.push_back(c.family);
    return out;
  }
};

inline json to_json(const VerifyReport& r, const VerifyOptions& opts) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"family", c.family},
                      {"name", c.name},
                      {"passed", c.passed},
                      {"instances", c.instances},
                      {"max_error", c.max_error},
                      {"tolerance", c.tolerance},
                      {"detail", c.detail}});
  }
  json o{{"tool", kToolName}, {"tool_version", kToolVersion}, {"passed", r.passed()}, {"families", r.families()}};
  o["options"] = {{"instances", opts.instances}, {"seed", opts.seed}};
  if (opts.injected_tr_margin) o["options"]["injected_tr_margin"] = *opts.injected_tr_margin;
  o["checks"] = checks;
  return o;
}

namespace detail {

inline CheckResult make_check(std::string family, std::string name, double tolerance) {
  CheckResult c;
  c.family = std::move(family);
  c.name = std::move(name);
  c.tolerance = tolerance;
  return c;
}

inline void record(CheckResult& c, double error) {
  if (!(error <= c.max_error)) c.max_error = std::isnan(error) ? std::numeric_limits<double>::infinity() : error;
  if (!(error <= c.tolerance)) c.passed = false;
}

inline std::vector<double> uniform_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

// Balanced labels with at least two identities and two samples per identity.
inline std::vector<int> pk_labels(Rng& rng, int max_batch) {
  const int p = uniform_int(rng, 2, std::max(2, max_batch / 2));
  const int k = uniform_int(rng, 2, std::max(2, max_batch / p));
  std::vector<int> labels;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < k; ++j) labels.push_back(i * 3 + 1);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

// ||a - n|| / max(||a|| + ||n||, floor): relative error of a whole gradient vector.
inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
    na += analytic[k] * analytic[k];
    nn += numeric[k] * numeric[k];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), 1e-12);
}

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double eps = kFdEpsilon) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = x[k];
    x[k] = keep + eps;
    const double up = f(x);
    x[k] = keep - eps;
    const double down = f(x);
    x[k] = keep;
    g[k] = (up - down) / (2 * eps);
  }
  return g;
}

// A hinge within this distance of its kink could flip inside the finite-difference stencil.
inline constexpr double kKinkGuard = 1e-2;

struct TripletInstance {
  std::vector<double> emb;
  std::vector<int> labels;
  int dim = 0;
};

// True when hardest-pair choices or hinge signs are unambiguous under perturbation of size eps.
inline bool triplet_is_smooth(const TripletInstance& t, double margin) {
  const int B = static_cast<int>(t.labels.size());
  for (int a = 0; a < B; ++a) {
    std::vector<double> pos, neg;
    for (int j = 0; j < B; ++j) {
      if (j == a) continue;
      const double d = static_cast<double>(oracle::euclid(t.emb, t.dim, a, j));
      if (d < kKinkGuard) return false;
      (t.labels[j] == t.labels[a] ? pos : neg).push_back(d);
    }
    std::sort(pos.rbegin(), pos.rend());
    std::sort(neg.begin(), neg.end());
    if (pos.size() > 1 && pos[0] - pos[1] < kKinkGuard) return false;
    if (neg.size() > 1 && neg[1] - neg[0] < kKinkGuard) return false;
    if (std::fabs(pos[0] - neg[0] + margin) < kKinkGuard) return false;
  }
  return true;
}

inline TripletInstance sample_triplet_instance(Rng& rng, int max_batch, int max_dim, double margin, bool smooth) {
  while (true) {
    TripletInstance t;
    t.labels = pk_labels(rng, max_batch);
    t.dim = uniform_int(rng, 1, max_dim);
    t.emb = uniform_vector(rng, t.labels.size() * static_cast<std::size_t>(t.dim), -1.0, 1.0);
    if (!smooth || triplet_is_smooth(t, margin)) return t;
  }
}

}  // namespace detail

// Eq. (1) on hand-evaluated inputs.
inline CheckResult check_eq1_hand_values(const VerifyOptions& opts) {
  auto c = detail::make_check("eq1_hand_values", "triplet_reid_constraint hand cases", 1e-7);
  const double m = opts.injected_tr_margin.value_or(kPaperMargin);
  struct Case {
    std::vector<double> a, p, n;
    int positions;
    double expected;
  };
  const std::vector<Case> cases{{{0.7, -1.2}, {0.7, -1.2}, {0.7, -1.2}, 2, 0.3},
                                {{0.0}, {2.0}, {1.0}, 1, 3.3},
                                {{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, 2, 0.0}};
  for (const auto& k : cases) {
    const auto r = losses::triplet_reid_constraint<double>(k.a, k.p, k.n, k.positions, m);
    detail::record(c, std::fabs(r.value - k.expected));
    ++c.instances;
  }
  const std::vector<double> blocks{0.0, 0.0, 3.3};
  detail::record(c, std::fabs(losses::tr_loss_over_blocks<double>(blocks) - 1.1));
  ++c.instances;
  return c;
}

inline CheckResult check_id_loss_oracle(const VerifyOptions& opts) {
  auto c = detail::make_check("loss_oracles", "id_loss", 1e-6);
  Rng rng(derive_seed(opts.seed, {0x1d}));
  for (int t = 0; t < opts.instances; ++t) {
    const int B = uniform_int(rng, 1, 16), C = uniform_int(rng, 2, 32);
    const auto logits = detail::uniform_vector(rng, static_cast<std::size_t>(B) * C, -6.0, 6.0);
    std::vector<int> labels(static_cast<std::size_t>(B));
    for (int& l : labels) l = uniform_int(rng, 0, C - 1);
    const double got = losses::id_loss<double>(logits, B, C, labels).value;
    detail::record(c, std::fabs(got - oracle::id_loss(logits, B, C, labels)));
    ++c.instances;
  }
  return c;
}

inline CheckResult check_triplet_oracle(const VerifyOptions& opts) {
  auto c = detail::make_check("loss_oracles", "batch_hard_triplet", 1e-6);
  Rng rng(derive_seed(opts.seed, {0x7a1}));
  for (int t = 0; t < opts.instances; ++t) {
    const auto inst = detail::sample_triplet_instance(rng, 16, 32, kPaperMargin, false);
    const int B = static_cast<int>(inst.labels.size());
    const double got = losses::batch_hard_triplet<double>(inst.emb, B, inst.dim, inst.labels, kPaperMargin).value;
    detail::record(c, std::fabs(got - oracle::batch_hard_triplet(inst.emb, B, inst.dim, inst.labels, kPaperMargin)));
    ++c.instances;
  }
  return c;
}

inline CheckResult check_reconstruction_oracle(const VerifyOptions& opts) {
  auto c = detail::make_check("loss_oracles", "reconstruction_loss", 1e-6);
  Rng rng(derive_seed(opts.seed, {0x4ec}));
  for (int t = 0; t < opts.instances; ++t) {
    const std::size_t n = static_cast<std::size_t>(uniform_int(rng, 1, 16)) * 3 * uniform_int(rng, 1, 32);
    const auto pred = detail::uniform_vector(rng, n, 0.0, 1.0);
    const auto target = detail::uniform_vector(rng, n, 0.0, 1.0);
    detail::record(c, std::fabs(losses::reconstruction_loss<double>(pred, target).value -
                                oracle::reconstruction_loss(pred, target)));
    ++c.instances;
  }
  return c;
}

inline CheckResult check_tr_oracle(const VerifyOptions& opts) {
  auto c = detail::make_check("loss_oracles", "triplet_reid_constraint", 1e-6);
  Rng rng(derive_seed(opts.seed, {0x7c}));
  const double lib_margin = opts.injected_tr_margin.value_or(kPaperMargin);
  for (int t = 0; t < opts.instances; ++t) {
    const int C = uniform_int(rng, 1, 32), H = uniform_int(rng, 1, 8), W = uniform_int(rng, 1, 8);
    const std::size_t n = static_cast<std::size_t>(C) * H * W;
    // Small spread keeps a good share of instances on the active side of the hinge.
    const double spread = uniform(rng, 0.01, 0.3);
    const auto a = detail::uniform_vector(rng, n, -spread, spread);
    const auto p = detail::uniform_vector(rng, n, -spread, spread);
    const auto ng = detail::uniform_vector(rng, n, -spread, spread);
    const double got = losses::triplet_reid_constraint<double>(a, p, ng, H * W, lib_margin).value;
    detail::record(c, std::fabs(got - oracle::triplet_reid_constraint(a, p, ng, C, H * W, kPaperMargin)));
    ++c.instances;
  }
  return c;
}

inline CheckResult check_total_loss(const VerifyOptions& opts) {
  auto c = detail::make_check("weighting", "total_loss", 0.0);
  Rng rng(derive_seed(opts.seed, {0x707}));
  for (int t = 0; t < opts.instances; ++t) {
    const losses::LossComponents comp{uniform(rng, 0, 10), uniform(rng, 0, 10), uniform(rng, 0, 10), uniform(rng, 0, 10)};
    for (const auto& w : {losses::LossWeights::reid(), losses::LossWeights::synthetic()}) {
      const double expected = oracle::weighted_total(comp.id, comp.triplet, comp.rec, comp.tr, w.id, w.triplet, w.rec, w.tr);
      detail::record(c, std::fabs(losses::total_loss(comp, w) - expected));
    }
    ++c.instances;
  }
  detail::record(c, std::fabs(losses::total_loss({1, 1, 1, 1}, losses::LossWeights::reid()) - 4.0));
  detail::record(c, std::fabs(losses::total_loss({7, 9, 2, 5}, losses::LossWeights::synthetic()) - 2.0));
  return c;
}

// Analytic gradients of each loss against central differences (64-bit, eps 1e-4).
inline std::vector<CheckResult> check_loss_gradients(const VerifyOptions& opts) {
  const int n = std::max(1, opts.instances / 4);
  const double tol = 1e-4;
  std::vector<CheckResult> out;
  Rng rng(derive_seed(opts.seed, {0x96ad}));

  auto id = detail::make_check("loss_gradients", "id_loss", tol);
  for (int t = 0; t < n; ++t) {
    const int B = uniform_int(rng, 1, 16), C = uniform_int(rng, 2, 32);
    const auto logits = detail::uniform_vector(rng, static_cast<std::size_t>(B) * C, -3.0, 3.0);
    std::vector<int> labels(static_cast<std::size_t>(B));
    for (int& l : labels) l = uniform_int(rng, 0, C - 1);
    const auto analytic = losses::id_loss<double>(logits, B, C, labels).grad;
    const auto numeric = detail::central_difference(
        [&](const std::vector<double>& x) { return losses::id_loss<double>(x, B, C, labels).value; }, logits);
    detail::record(id, detail::relative_error(analytic, numeric));
    ++id.instances;
  }
  out.push_back(id);

  auto tri = detail::make_check("loss_gradients", "batch_hard_triplet", tol);
  for (int t = 0; t < n; ++t) {
    const auto inst = detail::sample_triplet_instance(rng, 12, 8, kPaperMargin, true);
    const int B = static_cast<int>(inst.labels.size());
    const auto analytic = losses::batch_hard_triplet<double>(inst.emb, B, inst.dim, inst.labels, kPaperMargin).grad;
    const auto numeric = detail::central_difference(
        [&](const std::vector<double>& x) {
          return losses::batch_hard_triplet<double>(x, B, inst.dim, inst.labels, kPaperMargin).value;
        },
        inst.emb);
    detail::record(tri, detail::relative_error(analytic, numeric));
    ++tri.instances;
  }
  out.push_back(tri);

  auto rec = detail::make_check("loss_gradients", "reconstruction_loss", tol);
  for (int t = 0; t < n; ++t) {
    const std::size_t len = static_cast<std::size_t>(uniform_int(rng, 3, 96));
    const auto target = detail::uniform_vector(rng, len, 0.0, 1.0);
    std::vector<double> pred(len);
    for (std::size_t k = 0; k < len; ++k) {
      const double gap = uniform(rng, detail::kKinkGuard, 0.5);
      pred[k] = target[k] + (uniform(rng, 0, 1) < 0.5 ? -gap : gap);
    }
    const auto analytic = losses::reconstruction_loss<double>(pred, target).grad;
    const auto numeric = detail::central_difference(
        [&](const std::vector<double>& x) { return losses::reconstruction_loss<double>(x, target).value; }, pred);
    detail::record(rec, detail::relative_error(analytic, numeric));
    ++rec.instances;
  }
  out.push_back(rec);

  auto tr = detail::make_check("loss_gradients", "triplet_reid_constraint", tol);
  for (int t = 0; t < n; ++t) {
    const int C = uniform_int(rng, 1, 8), P = uniform_int(rng, 1, 16);
    const std::size_t m = static_cast<std::size_t>(C) * P;
    std::vector<double> x;
    do {
      x = detail::uniform_vector(rng, 3 * m, -0.4, 0.4);
    } while (std::fabs(losses::triplet_reid_constraint<double>(std::span(x).subspan(0, m), std::span(x).subspan(m, m),
                                                                std::span(x).subspan(2 * m, m), P, kPaperMargin)
                           .pre_hinge) < detail::kKinkGuard);
    auto value = [&](const std::vector<double>& v) {
      const std::span<const double> s(v);
      return losses::triplet_reid_constraint<double>(s.subspan(0, m), s.subspan(m, m), s.subspan(2 * m, m), P,
                                                     kPaperMargin)
          .value;
    };
    const std::span<const double> s(x);
    const auto r = losses::triplet_reid_constraint<double>(s.subspan(0, m), s.subspan(m, m), s.subspan(2 * m, m), P,
                                                           kPaperMargin);
    std::vector<double> analytic = r.grad_anchor;
    analytic.insert(analytic.end(), r.grad_positive.begin(), r.grad_positive.end());
    analytic.insert(analytic.end(), r.grad_negative.begin(), r.grad_negative.end());
    detail::record(tr, detail::relative_error(analytic, detail::central_difference(value, x)));
    ++tr.instances;
  }
  out.push_back(tr);

  // Whole objective: weighted sum of all four losses over one concatenated input vector.
  auto total = detail::make_check("loss_gradients", "total_loss", tol);
  for (int t = 0; t < n; ++t) {
    const auto inst = detail::sample_triplet_instance(rng, 8, 4, kPaperMargin, true);
    const int B = static_cast<int>(inst.labels.size());
    const int C = 6;
    std::vector<int> cls(inst.labels.size());
    for (std::size_t k = 0; k < cls.size(); ++k) cls[k] = inst.labels[k] % C;
    const std::size_t nl = static_cast<std::size_t>(B) * C, ne = inst.emb.size(), nr = 12, ntap = 8;
    std::vector<double> x = detail::uniform_vector(rng, nl, -2, 2);
    x.insert(x.end(), inst.emb.begin(), inst.emb.end());
    const auto target = detail::uniform_vector(rng, nr, 0.3, 0.7);
    for (std::size_t k = 0; k < nr; ++k) x.push_back(target[k] + (k % 2 ? 0.2 : -0.2));
    std::vector<double> taps;
    do {
      taps = detail::uniform_vector(rng, 3 * ntap, -0.3, 0.3);
    } while (std::fabs(losses::triplet_reid_constraint<double>(std::span(taps).subspan(0, ntap),
                                                                std::span(taps).subspan(ntap, ntap),
                                                                std::span(taps).subspan(2 * ntap, ntap), 4, kPaperMargin)
                           .pre_hinge) < detail::kKinkGuard);
    x.insert(x.end(), taps.begin(), taps.end());
    const auto w = losses::LossWeights::reid();
    auto evaluate = [&](const std::vector<double>& v, std::vector<double>* grad) {
      const std::span<const double> s(v);
      const auto li = losses::id_loss<double>(s.subspan(0, nl), B, C, cls);
      const auto lt = losses::batch_hard_triplet<double>(s.subspan(nl, ne), B, inst.dim, inst.labels, kPaperMargin);
      const auto lr = losses::reconstruction_loss<double>(s.subspan(nl + ne, nr), target);
      const std::size_t o = nl + ne + nr;
      const auto lc = losses::triplet_reid_constraint<double>(s.subspan(o, ntap), s.subspan(o + ntap, ntap),
                                                              s.subspan(o + 2 * ntap, ntap), 4, kPaperMargin);
      if (grad) {
        grad->clear();
        for (double g : li.grad) grad->push_back(w.id * g);
        for (double g : lt.grad) grad->push_back(w.triplet * g);
        for (double g : lr.grad) grad->push_back(w.rec * g);
        for (const auto* part : {&lc.grad_anchor, &lc.grad_positive, &lc.grad_negative})
          for (double g : *part) grad->push_back(w.tr * g);
      }
      return losses::total_loss({li.value, lt.value, lr.value, lc.value}, w);
    };
    std::vector<double> analytic;
    evaluate(x, &analytic);
    const auto numeric = detail::central_difference([&](const std::vector<double>& v) { return evaluate(v, nullptr); }, x);
    detail::record(total, detail::relative_error(analytic, numeric));
    ++total.instances;
  }
  out.push_back(total);
  return out;
}

// Library ranking metrics against sort-free counting oracles, plus the AP = 5/6 hand case.
inline std::vector<CheckResult> check_metric_oracles(const VerifyOptions& opts) {
  auto cmc = detail::make_check("metric_oracles", "cmc", 0.0);
  auto map = detail::make_check("metric_oracles", "mean_average_precision", 1e-9);
  Rng rng(derive_seed(opts.seed, {0x3e7}));
  for (int t = 0; t < opts.instances; ++t) {
    const int dim = uniform_int(rng, 1, 8), G = uniform_int(rng, 2, 50), Q = uniform_int(rng, 1, 10);
    const int ids = uniform_int(rng, 1, std::max(1, G / 2));
    std::vector<int> gids(static_cast<std::size_t>(G));
    for (int i = 0; i < G; ++i) gids[static_cast<std::size_t>(i)] = i < ids ? i : uniform_int(rng, 0, ids - 1);
    std::shuffle(gids.begin(), gids.end(), rng);
    std::vector<int> qids(static_cast<std::size_t>(Q));
    for (int& q : qids) q = uniform_int(rng, 0, ids - 1);
    // Coarse grid values produce distance ties, exercising the index tie-break.
    auto grid = [&](std::size_t n) {
      std::vector<double> v(n);
      for (double& x : v) x = uniform_int(rng, -2, 2);
      return v;
    };
    const auto qv = grid(static_cast<std::size_t>(Q) * dim), gv = grid(static_cast<std::size_t>(G) * dim);
    const auto ranking = eval::rank_gallery(qv, gv, dim, eval::DistanceKind::kEuclidean);
    std::vector<std::vector<double>> dist(static_cast<std::size_t>(Q), std::vector<double>(static_cast<std::size_t>(G)));
    for (int q = 0; q < Q; ++q)
      for (int g = 0; g < G; ++g)
        dist[static_cast<std::size_t>(q)][static_cast<std::size_t>(g)] = oracle::squared_euclidean(qv, gv, dim, q, g);
    const auto expected_curve = oracle::cmc_curve(dist, qids, gids);
    const auto curve = eval::cmc_curve(ranking, qids, gids);
    double cerr = curve.size() == expected_curve.size() ? 0.0 : 1.0;
    for (std::size_t k = 0; k < std::min(curve.size(), expected_curve.size()); ++k) {
      cerr = std::max(cerr, std::fabs(curve[k] - expected_curve[k]));
      cerr = std::max(cerr, std::fabs(eval::cmc(ranking, qids, gids, static_cast<int>(k + 1)) - expected_curve[k]));
    }
    detail::record(cmc, cerr);
    detail::record(map, std::fabs(eval::mean_average_precision(ranking, qids, gids) -
                                  oracle::mean_average_precision(dist, qids, gids)));
    ++cmc.instances;
    ++map.instances;
  }
  const std::vector<int> gids{7, 3, 7, 4};
  const double ap = eval::average_precision({0, 1, 2, 3}, 7, gids);
  detail::record(map, std::fabs(ap - 5.0 / 6.0));
  return {cmc, map};
}

namespace detail {

// Scalar objective sum(r * y) for a random r; returns the analytic gradient via `backward`.
template <typename Forward, typename Backward>
double layer_check(Rng& rng, Tensor<double> x, std::vector<nn::Parameter<double>*> params, Forward fwd, Backward bwd) {
  const Tensor<double> y0 = fwd(x, true);
  Tensor<double> r(y0.shape());
  for (auto& v : r.values()) v = uniform(rng, -1, 1);
  for (auto* p : params) p->grad.zero();
  const Tensor<double> dx = bwd(r);
  auto objective = [&]() {
    const Tensor<double> y = fwd(x, false);
    double s = 0;
    for (std::size_t k = 0; k < y.size(); ++k) s += y[k] * r[k];
    return s;
  };
  std::vector<double> analytic, numeric;
  auto probe = [&](double& slot, double grad) {
    const double keep = slot;
    slot = keep + kFdEpsilon;
    const double up = objective();
    slot = keep - kFdEpsilon;
    const double down = objective();
    slot = keep;
    analytic.push_back(grad);
    numeric.push_back((up - down) / (2 * kFdEpsilon));
  };
  const int probes = 12;
  for (int k = 0; k < probes; ++k) {
    const auto i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(x.size()) - 1));
    probe(x[i], dx[i]);
  }
  for (auto* p : params) {
    if (!p->trainable) continue;
    for (int k = 0; k < 4; ++k) {
      const auto i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(p->value.size()) - 1));
      probe(p->value[i], p->grad[i]);
    }
  }
  return relative_error(analytic, numeric);
}

inline Tensor<double> random_tensor(Rng& rng, Shape s) {
  Tensor<double> t(s);
  for (auto& v : t.values()) v = uniform(rng, -1, 1);
  return t;
}

}  // namespace detail

// Layer backward passes against finite differences on small random tensors.
inline std::vector<CheckResult> check_layer_gradients(const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  const double tol = 1e-4;
  const int reps = std::max(1, opts.instances / 50);
  Rng rng(derive_seed(opts.seed, {0x1a7e}));

  auto conv = detail::make_check("layer_gradients", "conv2d", tol);
  for (int t = 0; t < reps; ++t) {
    const int stride = 1 + t % 2;
    nn::Conv2d<double> layer("c", 3, 4, 3, stride, 1, true);
    layer.init(rng);
    typename nn::Conv2d<double>::Cache cache;
    nn::ParamList<double> ps;
    layer.collect(ps);
    detail::record(conv, detail::layer_check(
                             rng, detail::random_tensor(rng, {2, 3, 6, 5}), ps,
                             [&](const Tensor<double>& x, bool keep) { return layer.forward(x, keep ? &cache : nullptr); },
                             [&](const Tensor<double>& dy) { return layer.backward(dy, cache); }));
    ++conv.instances;
  }
  out.push_back(conv);

  auto bn = detail::make_check("layer_gradients", "batchnorm2d", tol);
  for (int t = 0; t < reps; ++t) {
    nn::BatchNorm2d<double> layer("bn", 3);
    typename nn::BatchNorm2d<double>::Cache cache;
    nn::ParamList<double> ps;
    layer.collect(ps);
    for (auto* p : ps)
      if (p->trainable)
        for (auto& v : p->value.values()) v = uniform(rng, 0.5, 1.5);
    detail::record(bn, detail::layer_check(
                           rng, detail::random_tensor(rng, {3, 3, 4, 3}), ps,
                           [&](const Tensor<double>& x, bool keep) {
                             return layer.forward(x, nn::Mode::kTrain, keep ? &cache : nullptr);
                           },
                           [&](const Tensor<double>& dy) { return layer.backward(dy, cache); }));
    ++bn.instances;
  }
  out.push_back(bn);

  auto lin = detail::make_check("layer_gradients", "linear", tol);
  for (int t = 0; t < reps; ++t) {
    nn::Linear<double> layer("fc", 6, 5);
    layer.init(rng, 0.5);
    typename nn::Linear<double>::Cache cache;
    nn::ParamList<double> ps;
    layer.collect(ps);
    detail::record(lin, detail::layer_check(
                            rng, detail::random_tensor(rng, {4, 6, 1, 1}), ps,
                            [&](const Tensor<double>& x, bool keep) { return layer.forward(x, keep ? &cache : nullptr); },
                            [&](const Tensor<double>& dy) { return layer.backward(dy, cache); }));
    ++lin.instances;
  }
  out.push_back(lin);

  auto resize = detail::make_check("layer_gradients", "bilinear_resize", tol);
  for (int t = 0; t < reps; ++t) {
    const nn::BilinearResize<double> layer(5, 5);
    const Shape in{2, 2, 4, 2};
    detail::record(resize, detail::layer_check(
                               rng, detail::random_tensor(rng, in), {},
                               [&](const Tensor<double>& x, bool) { return layer.forward(x); },
                               [&](const Tensor<double>& dy) { return layer.backward(dy, in); }));
    ++resize.instances;
  }
  out.push_back(resize);

  auto res = detail::make_check("layer_gradients", "residual_block", tol);
  for (int t = 0; t < reps; ++t) {
    nn::ResidualBlock<double> block("r", 3, 4, 2);
    block.init(rng);
    typename nn::ResidualBlock<double>::Cache cache;
    nn::ParamList<double> ps;
    block.collect(ps);
    detail::record(res, detail::layer_check(
                            rng, detail::random_tensor(rng, {3, 3, 6, 4}), ps,
                            [&](const Tensor<double>& x, bool keep) {
                              return block.forward(x, nn::Mode::kTrain, keep ? &cache : nullptr);
                            },
                            [&](const Tensor<double>& dy) { return block.backward(dy, cache); }));
    ++res.instances;
  }
  out.push_back(res);

  auto up = detail::make_check("layer_gradients", "upsample_block", tol);
  for (int t = 0; t < reps; ++t) {
    nn::UpsampleBlock<double> block("u", 4, 3);
    block.init(rng);
    typename nn::UpsampleBlock<double>::Cache cache;
    nn::ParamList<double> ps;
    block.collect(ps);
    detail::record(up, detail::layer_check(
                           rng, detail::random_tensor(rng, {3, 4, 3, 3}), ps,
                           [&](const Tensor<double>& x, bool keep) {
                             return block.forward(x, nn::Mode::kTrain, keep ? &cache : nullptr);
                           },
                           [&](const Tensor<double>& dy) { return block.backward(dy, cache); }));
    ++up.instances;
  }
  out.push_back(up);
  return out;
}

inline VerifyReport run_verify(const VerifyOptions& opts = {}) {
  VerifyReport r;
  r.checks.push_back(check_eq1_hand_values(opts));
  r.checks.push_back(check_id_loss_oracle(opts));
  r.checks.push_back(check_triplet_oracle(opts));
  r.checks.push_back(check_reconstruction_oracle(opts));
  r.checks.push_back(check_tr_oracle(opts));
  r.checks.push_back(check_total_loss(opts));
  for (auto& c : check_loss_gradients(opts)) r.checks.push_back(std::move(c));
  for (auto& c : check_metric_oracles(opts)) r.checks.push_back(std::move(c));
  for (auto& c : check_layer_gradients(opts)) r.checks.push_back(std::move(c));
  return r;
}

}  // namespace san::verify
