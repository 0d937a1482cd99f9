// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "san/core/errors.hpp"

namespace san::eval {

enum class DistanceKind { kEuclidean, kCosine };

inline std::string to_string(DistanceKind k) { return k == DistanceKind::kCosine ? "cosine" : "euclidean"; }

inline DistanceKind parse_distance(const std::string& s) {
  if (s == "euclidean") return DistanceKind::kEuclidean;
  if (s == "cosine") return DistanceKind::kCosine;
  throw ConfigError("unknown distance kind '" + s + "' (expected euclidean or cosine)");
}

// Row-major N x dim embedding matrix with per-row labels.
struct EmbeddingSet {
  int dim = 0;
  std::vector<double> values;
  std::vector<std::string> sample_ids;
  std::vector<int> identities;
  std::vector<int> views;

  int rows() const { return static_cast<int>(identities.size()); }
  std::span<const double> row(int i) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim));
  }
};

struct RankingResult {
  DistanceKind kind = DistanceKind::kEuclidean;
  std::vector<std::vector<int>> order;  // per query: gallery indices, nearest first
};

// Squared Euclidean (order-equivalent to Euclidean) or 1 - cosine similarity.
inline double distance(std::span<const double> a, std::span<const double> b, DistanceKind kind) {
  if (kind == DistanceKind::kEuclidean) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return s;
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0 || nb == 0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

// Ascending distance; ties resolved by ascending gallery index.
inline RankingResult rank_gallery(std::span<const double> queries, std::span<const double> gallery, int dim,
                                  DistanceKind kind) {
  require_input(dim > 0, "rank_gallery: embedding dimension must be positive");
  require_input(queries.size() % static_cast<std::size_t>(dim) == 0 &&
                    gallery.size() % static_cast<std::size_t>(dim) == 0,
                "rank_gallery: embedding dimension mismatch");
  const int Q = static_cast<int>(queries.size() / dim);
  const int G = static_cast<int>(gallery.size() / dim);
  RankingResult r;
  r.kind = kind;
  r.order.resize(static_cast<std::size_t>(Q));
  std::vector<double> d(static_cast<std::size_t>(G));
  for (int q = 0; q < Q; ++q) {
    const auto qv = queries.subspan(static_cast<std::size_t>(q) * dim, static_cast<std::size_t>(dim));
    for (int g = 0; g < G; ++g) {
      d[static_cast<std::size_t>(g)] =
          distance(qv, gallery.subspan(static_cast<std::size_t>(g) * dim, static_cast<std::size_t>(dim)), kind);
    }
    auto& ord = r.order[static_cast<std::size_t>(q)];
    ord.resize(static_cast<std::size_t>(G));
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)]; });
  }
  return r;
}

inline RankingResult rank_gallery(const EmbeddingSet& queries, const EmbeddingSet& gallery, DistanceKind kind) {
  require_input(queries.dim == gallery.dim, "rank_gallery: query dim " + std::to_string(queries.dim) +
                                                " != gallery dim " + std::to_string(gallery.dim));
  return rank_gallery(queries.values, gallery.values, queries.dim, kind);
}

namespace detail {

inline void check_query_ids(std::span<const int> query_ids, std::span<const int> gallery_ids,
                            const RankingResult& r) {
  require_input(r.order.size() == query_ids.size(), "ranking count does not match query count");
  const std::set<int> gallery(gallery_ids.begin(), gallery_ids.end());
  for (int q : query_ids)
    if (!gallery.contains(q)) throw DataError("query identity " + std::to_string(q) + " has no gallery match");
}

}  // namespace detail

// Fraction of queries whose first k ranked gallery items contain their identity.
inline double cmc(const RankingResult& r, std::span<const int> query_ids, std::span<const int> gallery_ids, int k) {
  require_input(k >= 1, "cmc: k must be >= 1");
  detail::check_query_ids(query_ids, gallery_ids, r);
  if (query_ids.empty()) return 0.0;
  int hits = 0;
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    const auto& ord = r.order[q];
    const std::size_t limit = std::min(ord.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < limit; ++i) {
      if (gallery_ids[static_cast<std::size_t>(ord[i])] == query_ids[q]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(query_ids.size());
}

// CMC@1..CMC@G in one pass.
inline std::vector<double> cmc_curve(const RankingResult& r, std::span<const int> query_ids,
                                     std::span<const int> gallery_ids) {
  detail::check_query_ids(query_ids, gallery_ids, r);
  std::vector<double> curve(gallery_ids.size(), 0.0);
  if (query_ids.empty()) return curve;
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    const auto& ord = r.order[q];
    for (std::size_t i = 0; i < ord.size(); ++i) {
      if (gallery_ids[static_cast<std::size_t>(ord[i])] == query_ids[q]) {
        for (std::size_t k = i; k < curve.size(); ++k) curve[k] += 1.0;
        break;
      }
    }
  }
  for (double& v : curve) v /= static_cast<double>(query_ids.size());
  return curve;
}

inline double average_precision(const std::vector<int>& order, int query_id, std::span<const int> gallery_ids) {
  int relevant = 0;
  double sum = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (gallery_ids[static_cast<std::size_t>(order[i])] == query_id) {
      ++relevant;
      sum += static_cast<double>(relevant) / static_cast<double>(i + 1);
    }
  }
  return relevant == 0 ? 0.0 : sum / relevant;
}

inline std::vector<double> per_query_average_precision(const RankingResult& r, std::span<const int> query_ids,
                                                       std::span<const int> gallery_ids) {
  detail::check_query_ids(query_ids, gallery_ids, r);
  std::vector<double> ap;
  ap.reserve(query_ids.size());
  for (std::size_t q = 0; q < query_ids.size(); ++q) ap.push_back(average_precision(r.order[q], query_ids[q], gallery_ids));
  return ap;
}

inline double mean_average_precision(const RankingResult& r, std::span<const int> query_ids,
                                     std::span<const int> gallery_ids) {
  const auto ap = per_query_average_precision(r, query_ids, gallery_ids);
  if (ap.empty()) return 0.0;
  return std::accumulate(ap.begin(), ap.end(), 0.0) / static_cast<double>(ap.size());
}

}  // namespace san::eval
