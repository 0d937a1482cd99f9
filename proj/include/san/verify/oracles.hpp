// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

// Brute-force reference implementations. They share no code with the library and favour
// the most literal reading of each definition over speed or numerical care.
namespace san::verify::oracle {

// -log( exp(z_y) / sum_k exp(z_k) ), averaged over rows. Long double, no max shift.
inline double id_loss(const std::vector<double>& logits, int batch, int classes, const std::vector<int>& labels) {
  long double total = 0;
  for (int i = 0; i < batch; ++i) {
    long double denom = 0;
    for (int k = 0; k < classes; ++k) denom += std::exp(static_cast<long double>(logits[i * classes + k]));
    const long double p = std::exp(static_cast<long double>(logits[i * classes + labels[i]])) / denom;
    total += -std::log(p);
  }
  return static_cast<double>(total / batch);
}

inline long double euclid(const std::vector<double>& e, int dim, int i, int j) {
  long double s = 0;
  for (int k = 0; k < dim; ++k) {
    const long double d = static_cast<long double>(e[i * dim + k]) - e[j * dim + k];
    s += d * d;
  }
  return std::sqrt(s);
}

// Every (anchor, positive, negative) combination is enumerated; the per-anchor term is the
// largest hinge argument over all its pairs, clipped at zero.
inline double batch_hard_triplet(const std::vector<double>& emb, int batch, int dim, const std::vector<int>& labels,
                                 double margin) {
  long double total = 0;
  for (int a = 0; a < batch; ++a) {
    long double worst = -std::numeric_limits<long double>::infinity();
    for (int p = 0; p < batch; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      for (int n = 0; n < batch; ++n) {
        if (labels[n] == labels[a]) continue;
        const long double v = euclid(emb, dim, a, p) - euclid(emb, dim, a, n) + margin;
        if (v > worst) worst = v;
      }
    }
    total += worst > 0 ? worst : 0;
  }
  return static_cast<double>(total / batch);
}

inline double reconstruction_loss(const std::vector<double>& pred, const std::vector<double>& target) {
  long double s = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) s += std::fabs(static_cast<long double>(pred[k]) - target[k]);
  return static_cast<double>(s / pred.size());
}

// Taps are channel-major (c, h*w). Distances are summed position by position.
inline double triplet_reid_constraint(const std::vector<double>& a, const std::vector<double>& p,
                                      const std::vector<double>& n, int channels, int positions, double margin) {
  long double pos_sum = 0, neg_sum = 0;
  for (int s = 0; s < positions; ++s) {
    long double dp = 0, dn = 0;
    for (int c = 0; c < channels; ++c) {
      const std::size_t k = static_cast<std::size_t>(c) * positions + s;
      dp += (static_cast<long double>(a[k]) - p[k]) * (static_cast<long double>(a[k]) - p[k]);
      dn += (static_cast<long double>(a[k]) - n[k]) * (static_cast<long double>(a[k]) - n[k]);
    }
    pos_sum += dp;
    neg_sum += dn;
  }
  const long double v = pos_sum / positions - neg_sum / positions + margin;
  return static_cast<double>(v > 0 ? v : 0);
}

inline double weighted_total(double id, double tri, double rec, double tr, double w_id, double w_tri, double w_rec,
                             double w_tr) {
  return w_id * id + w_tri * tri + w_rec * rec + w_tr * tr;
}

inline double squared_euclidean(const std::vector<double>& q, const std::vector<double>& g, int dim, int qi, int gi) {
  long double s = 0;
  for (int k = 0; k < dim; ++k) {
    const long double d = static_cast<long double>(q[qi * dim + k]) - g[gi * dim + k];
    s += d * d;
  }
  return static_cast<double>(s);
}

// Item j precedes item i when it is strictly closer, or equally close with a smaller index.
inline bool precedes(const std::vector<double>& d, int j, int i) { return d[j] < d[i] || (d[j] == d[i] && j < i); }

// 1-based rank of gallery item i, counted without sorting.
inline int rank_of(const std::vector<double>& d, int i) {
  int r = 1;
  for (int j = 0; j < static_cast<int>(d.size()); ++j)
    if (j != i && precedes(d, j, i)) ++r;
  return r;
}

// CMC@k for k = 1..gallery size, from the rank of the best-placed correct match.
inline std::vector<double> cmc_curve(const std::vector<std::vector<double>>& dist, const std::vector<int>& qids,
                                     const std::vector<int>& gids) {
  const int G = static_cast<int>(gids.size());
  std::vector<double> curve(static_cast<std::size_t>(G), 0.0);
  for (std::size_t q = 0; q < qids.size(); ++q) {
    int best = G + 1;
    for (int i = 0; i < G; ++i)
      if (gids[i] == qids[q]) best = std::min(best, rank_of(dist[q], i));
    for (int k = best; k <= G; ++k) curve[static_cast<std::size_t>(k - 1)] += 1.0;
  }
  for (double& v : curve) v /= static_cast<double>(qids.size());
  return curve;
}

// Mean over relevant items of (relevant items ranked at or above it) / (its rank).
inline double average_precision(const std::vector<double>& d, int qid, const std::vector<int>& gids) {
  const int G = static_cast<int>(gids.size());
  long double s = 0;
  int relevant = 0;
  for (int i = 0; i < G; ++i) {
    if (gids[i] != qid) continue;
    ++relevant;
    int hits = 0;
    for (int j = 0; j < G; ++j)
      if (gids[j] == qid && (j == i || precedes(d, j, i))) ++hits;
    s += static_cast<long double>(hits) / rank_of(d, i);
  }
  return relevant == 0 ? 0.0 : static_cast<double>(s / relevant);
}

inline double mean_average_precision(const std::vector<std::vector<double>>& dist, const std::vector<int>& qids,
                                     const std::vector<int>& gids) {
  long double s = 0;
  for (std::size_t q = 0; q < qids.size(); ++q) s += average_precision(dist[q], qids[q], gids);
  return static_cast<double>(s / qids.size());
}

}  // namespace san::verify::oracle
