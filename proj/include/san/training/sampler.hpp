// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/random.hpp"
#include "san/losses/losses.hpp"

namespace san::training {

using json = nlohmann::ordered_json;

struct PKBatchSpec {
  int p = 4;  // identities per batch
  int k = 4;  // samples per identity

  void validate() const { require_config(p >= 2 && k >= 2, "PK batches need P >= 2 and K >= 2"); }
  int batch_size() const { return p * k; }
};

inline void to_json(json& j, const PKBatchSpec& s) { j = json{{"p", s.p}, {"k", s.k}}; }
inline void from_json(const json& j, PKBatchSpec& s) {
  s.p = j.value("p", 4);
  s.k = j.value("k", 4);
}

// Row indices of a split grouped by identity, in ascending identity order.
inline std::map<int, std::vector<int>> group_by_identity(std::span<const int> identities) {
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(identities.size()); ++i) groups[identities[static_cast<std::size_t>(i)]].push_back(i);
  return groups;
}

// P distinct identities drawn uniformly, K rows each. Identities with fewer than K
// rows contribute all of them, topped up by draws with replacement.
inline std::vector<int> sample_pk_batch(const std::map<int, std::vector<int>>& groups, const PKBatchSpec& spec,
                                        Rng& rng) {
  spec.validate();
  if (static_cast<int>(groups.size()) < spec.p) {
    throw DataError("PK sampling needs " + std::to_string(spec.p) + " identities, split has " +
                    std::to_string(groups.size()));
  }
  std::vector<int> ids;
  ids.reserve(groups.size());
  for (const auto& [id, rows] : groups) ids.push_back(id);
  // Partial Fisher-Yates: the first P slots become a uniform draw without replacement.
  for (int i = 0; i < spec.p; ++i) {
    const int j = uniform_int(rng, i, static_cast<int>(ids.size()) - 1);
    std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
  }
  std::vector<int> batch;
  batch.reserve(static_cast<std::size_t>(spec.batch_size()));
  for (int i = 0; i < spec.p; ++i) {
    std::vector<int> rows = groups.at(ids[static_cast<std::size_t>(i)]);
    const int distinct = std::min<int>(spec.k, static_cast<int>(rows.size()));
    for (int t = 0; t < distinct; ++t) {
      const int j = uniform_int(rng, t, static_cast<int>(rows.size()) - 1);
      std::swap(rows[static_cast<std::size_t>(t)], rows[static_cast<std::size_t>(j)]);
      batch.push_back(rows[static_cast<std::size_t>(t)]);
    }
    for (int t = distinct; t < spec.k; ++t) {
      batch.push_back(rows[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(rows.size()) - 1))]);
    }
  }
  return batch;
}

// One (anchor, positive, negative) per batch position: the positive is a uniformly
// drawn other position with the same label, the negative any position with another label.
inline std::vector<losses::Triple> select_tr_triplets(std::span<const int> labels, Rng& rng) {
  const int n = static_cast<int>(labels.size());
  std::vector<losses::Triple> out;
  out.reserve(labels.size());
  std::vector<int> pos, neg;
  for (int a = 0; a < n; ++a) {
    pos.clear();
    neg.clear();
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(a)] ? pos : neg).push_back(j);
    }
    if (pos.empty() || neg.empty()) {
      throw InputError("select_tr_triplets: anchor " + std::to_string(a) + " lacks a positive or a negative");
    }
    const int p = pos[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pos.size()) - 1))];
    const int q = neg[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(neg.size()) - 1))];
    out.push_back({a, p, q});
  }
  return out;
}

}  // namespace san::training
