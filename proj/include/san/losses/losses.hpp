// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "san/core/errors.hpp"

namespace san::losses {

using json = nlohmann::ordered_json;

struct LossConfig {
  double triplet_margin = 0.3;
  double tr_margin = 0.3;
  std::vector<int> tr_blocks{1, 2, 3};  // 1-based decoder block indices

  void validate() const {
    require_config(triplet_margin > 0 && tr_margin > 0, "loss margins must be positive");
    require_config(!tr_blocks.empty(), "at least one TR block is required");
    for (int b : tr_blocks) require_config(b >= 1 && b <= 3, "TR blocks must lie in {1, 2, 3}");
  }
};

inline void to_json(json& j, const LossConfig& c) {
  j = json{{"triplet_margin", c.triplet_margin}, {"tr_margin", c.tr_margin}, {"tr_blocks", c.tr_blocks}};
}
inline void from_json(const json& j, LossConfig& c) {
  LossConfig d;
  c.triplet_margin = j.value("triplet_margin", d.triplet_margin);
  c.tr_margin = j.value("tr_margin", d.tr_margin);
  c.tr_blocks = j.value("tr_blocks", d.tr_blocks);
}

// lambda_1..lambda_4 for one batch kind.
struct LossWeights {
  double id = 0, triplet = 0, rec = 0, tr = 0;

  static constexpr LossWeights reid() { return {0.5, 1.5, 1.0, 1.0}; }
  static constexpr LossWeights synthetic() { return {0.0, 0.0, 1.0, 0.0}; }

  bool operator==(const LossWeights&) const = default;
};

struct LossComponents {
  double id = 0, triplet = 0, rec = 0, tr = 0;
};

struct LossReport {
  LossComponents components;
  LossWeights weights;
  double total = 0;
};

inline double total_loss(const LossComponents& c, const LossWeights& w) {
  require_config(w.id >= 0 && w.triplet >= 0 && w.rec >= 0 && w.tr >= 0, "loss weights must be non-negative");
  return w.id * c.id + w.triplet * c.triplet + w.rec * c.rec + w.tr * c.tr;
}

inline LossReport make_report(const LossComponents& c, const LossWeights& w) {
  return LossReport{c, w, total_loss(c, w)};
}

template <std::floating_point T>
struct LossResult {
  T value = 0;
  std::vector<T> grad;  // d value / d input, same layout as the input
};

// Mean over the batch of -log softmax(logits)[label]; logits are row-major batch x classes.
template <std::floating_point T>
LossResult<T> id_loss(std::span<const T> logits, int batch, int classes, std::span<const int> labels) {
  require_input(batch > 0, "id_loss: empty batch");
  require_input(classes > 0 && logits.size() == static_cast<std::size_t>(batch) * classes,
                "id_loss: logits size does not match batch x classes");
  require_input(labels.size() == static_cast<std::size_t>(batch), "id_loss: label count mismatch");
  LossResult<T> r;
  r.grad.assign(logits.size(), T(0));
  for (int i = 0; i < batch; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require_input(y >= 0 && y < classes, "id_loss: label " + std::to_string(y) + " outside [0, classes)");
    const T* row = logits.data() + static_cast<std::size_t>(i) * classes;
    const T mx = *std::max_element(row, row + classes);
    T sum = 0;
    for (int k = 0; k < classes; ++k) sum += std::exp(row[k] - mx);
    const T lse = mx + std::log(sum);
    r.value += lse - row[y];
    T* g = r.grad.data() + static_cast<std::size_t>(i) * classes;
    for (int k = 0; k < classes; ++k) g[k] = std::exp(row[k] - lse) / batch;
    g[y] -= T(1) / batch;
  }
  r.value /= batch;
  return r;
}

// Batch-hard triplet loss on Euclidean (non-squared) distances; embeddings row-major batch x dim.
template <std::floating_point T>
LossResult<T> batch_hard_triplet(std::span<const T> emb, int batch, int dim, std::span<const int> labels,
                                 T margin) {
  require_input(batch > 0 && dim > 0 && emb.size() == static_cast<std::size_t>(batch) * dim,
                "batch_hard_triplet: embedding size does not match batch x dim");
  require_input(labels.size() == static_cast<std::size_t>(batch), "batch_hard_triplet: label count mismatch");
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) throw InputError("batch_hard_triplet: batch holds a single identity " +
                                          std::to_string(counts.begin()->first));
  for (const auto& [id, n] : counts)
    if (n < 2) throw InputError("batch_hard_triplet: identity " + std::to_string(id) + " has only one sample");

  std::vector<T> dist(static_cast<std::size_t>(batch) * batch, T(0));
  for (int i = 0; i < batch; ++i)
    for (int j = i + 1; j < batch; ++j) {
      T s = 0;
      for (int k = 0; k < dim; ++k) {
        const T d = emb[static_cast<std::size_t>(i) * dim + k] - emb[static_cast<std::size_t>(j) * dim + k];
        s += d * d;
      }
      dist[static_cast<std::size_t>(i) * batch + j] = dist[static_cast<std::size_t>(j) * batch + i] = std::sqrt(s);
    }

  LossResult<T> r;
  r.grad.assign(emb.size(), T(0));
  // d||e_i - e_j|| / d e_i, scaled by `w`, added to i and subtracted from j.
  auto accumulate = [&](int i, int j, T w) {
    const T d = dist[static_cast<std::size_t>(i) * batch + j];
    if (d <= T(0)) return;
    for (int k = 0; k < dim; ++k) {
      const T g = w * (emb[static_cast<std::size_t>(i) * dim + k] - emb[static_cast<std::size_t>(j) * dim + k]) / d;
      r.grad[static_cast<std::size_t>(i) * dim + k] += g;
      r.grad[static_cast<std::size_t>(j) * dim + k] -= g;
    }
  };
  for (int a = 0; a < batch; ++a) {
    int hardest_pos = -1, hardest_neg = -1;
    for (int j = 0; j < batch; ++j) {
      if (j == a) continue;
      const T d = dist[static_cast<std::size_t>(a) * batch + j];
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(a)]) {
        if (hardest_pos < 0 || d > dist[static_cast<std::size_t>(a) * batch + hardest_pos]) hardest_pos = j;
      } else if (hardest_neg < 0 || d < dist[static_cast<std::size_t>(a) * batch + hardest_neg]) {
        hardest_neg = j;
      }
    }
    const T pre = dist[static_cast<std::size_t>(a) * batch + hardest_pos] -
                  dist[static_cast<std::size_t>(a) * batch + hardest_neg] + margin;
    if (pre > T(0)) {
      r.value += pre;
      accumulate(a, hardest_pos, T(1) / batch);
      accumulate(a, hardest_neg, T(-1) / batch);
    }
  }
  r.value /= batch;
  return r;
}

// Mean absolute difference; gradient taken with respect to `prediction` (sign(0) = 0).
template <std::floating_point T>
LossResult<T> reconstruction_loss(std::span<const T> prediction, std::span<const T> target) {
  require_input(prediction.size() == target.size(), "reconstruction_loss: shape mismatch (" +
                                                        std::to_string(prediction.size()) + " vs " +
                                                        std::to_string(target.size()) + " values)");
  require_input(!prediction.empty(), "reconstruction_loss: empty input");
  LossResult<T> r;
  r.grad.resize(prediction.size());
  const T inv = T(1) / static_cast<T>(prediction.size());
  for (std::size_t k = 0; k < prediction.size(); ++k) {
    const T d = prediction[k] - target[k];
    r.value += std::abs(d);
    r.grad[k] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
  }
  r.value *= inv;
  return r;
}

template <std::floating_point T>
struct TripletTapResult {
  T value = 0;
  T pre_hinge = 0;
  std::vector<T> grad_anchor, grad_positive, grad_negative;
};

// max( ||a - p||^2 / (h w) - ||a - n||^2 / (h w) + m, 0 ) over whole h x w x c tap maps.
// The squared norm sums every position's channel vector, so element order is irrelevant.
template <std::floating_point T>
TripletTapResult<T> triplet_reid_constraint(std::span<const T> anchor, std::span<const T> positive,
                                            std::span<const T> negative, int positions, T margin) {
  require_input(anchor.size() == positive.size() && anchor.size() == negative.size(),
                "triplet_reid_constraint: tap shapes differ");
  require_input(positions > 0 && anchor.size() % static_cast<std::size_t>(positions) == 0,
                "triplet_reid_constraint: tap size is not a multiple of h x w");
  T pos = 0, neg = 0;
  for (std::size_t k = 0; k < anchor.size(); ++k) {
    const T dp = anchor[k] - positive[k];
    const T dn = anchor[k] - negative[k];
    pos += dp * dp;
    neg += dn * dn;
  }
  TripletTapResult<T> r;
  r.pre_hinge = pos / positions - neg / positions + margin;
  r.value = std::max(r.pre_hinge, T(0));
  r.grad_anchor.assign(anchor.size(), T(0));
  r.grad_positive.assign(anchor.size(), T(0));
  r.grad_negative.assign(anchor.size(), T(0));
  if (r.pre_hinge > T(0)) {
    const T s = T(2) / positions;
    for (std::size_t k = 0; k < anchor.size(); ++k) {
      r.grad_anchor[k] = s * ((anchor[k] - positive[k]) - (anchor[k] - negative[k]));
      r.grad_positive[k] = -s * (anchor[k] - positive[k]);
      r.grad_negative[k] = s * (anchor[k] - negative[k]);
    }
  }
  return r;
}

template <std::floating_point T>
T tr_loss_over_blocks(std::span<const T> block_values) {
  require_input(!block_values.empty(), "tr_loss_over_blocks: no blocks");
  T s = 0;
  for (T v : block_values) s += v;
  return s / static_cast<T>(block_values.size());
}

struct Triple {
  int anchor = 0, positive = 0, negative = 0;
  bool operator==(const Triple&) const = default;
};

// One decoder block's taps for a whole batch: `batch` samples of `per_sample` values laid
// out contiguously, covering `positions` = h_l * w_l spatial positions.
template <std::floating_point T>
struct TapBatch {
  std::span<const T> data;
  int batch = 0;
  int positions = 0;

  std::size_t per_sample() const { return data.size() / static_cast<std::size_t>(batch); }
  std::span<const T> sample(int i) const { return data.subspan(static_cast<std::size_t>(i) * per_sample(), per_sample()); }
};

template <std::floating_point T>
struct TrBatchResult {
  T value = 0;
  std::vector<T> block_values;
  std::vector<std::vector<T>> grads;  // per block, same layout as the tap batch
};

// Mean over anchors within each block, then mean over blocks.
template <std::floating_point T>
TrBatchResult<T> tr_batch_loss(std::span<const TapBatch<T>> blocks, std::span<const Triple> triples, T margin) {
  require_input(!blocks.empty(), "tr_batch_loss: no tap blocks");
  require_input(!triples.empty(), "tr_batch_loss: no triplets");
  TrBatchResult<T> r;
  const T anchor_scale = T(1) / static_cast<T>(triples.size());
  const T block_scale = T(1) / static_cast<T>(blocks.size());
  for (const TapBatch<T>& tb : blocks) {
    std::vector<T> g(tb.data.size(), T(0));
    T block_sum = 0;
    for (const Triple& t : triples) {
      require_input(t.anchor >= 0 && t.anchor < tb.batch && t.positive >= 0 && t.positive < tb.batch &&
                        t.negative >= 0 && t.negative < tb.batch,
                    "tr_batch_loss: triple index out of range");
      auto c = triplet_reid_constraint(tb.sample(t.anchor), tb.sample(t.positive), tb.sample(t.negative),
                                       tb.positions, margin);
      block_sum += c.value;
      if (c.value <= T(0)) continue;
      const std::size_t m = tb.per_sample();
      const T w = anchor_scale * block_scale;
      for (std::size_t k = 0; k < m; ++k) {
        g[static_cast<std::size_t>(t.anchor) * m + k] += w * c.grad_anchor[k];
        g[static_cast<std::size_t>(t.positive) * m + k] += w * c.grad_positive[k];
        g[static_cast<std::size_t>(t.negative) * m + k] += w * c.grad_negative[k];
      }
    }
    r.block_values.push_back(block_sum * anchor_scale);
    r.grads.push_back(std::move(g));
  }
  r.value = tr_loss_over_blocks<T>(r.block_values);
  return r;
}

}  // namespace san::losses
