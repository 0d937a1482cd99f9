// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/core/image.hpp"
#include "san/core/random.hpp"
#include "san/datagen/dataset.hpp"
#include "san/eval/metrics.hpp"
#include "san/model/san_model.hpp"
#include "san/version.hpp"

namespace san::eval {

using json = nlohmann::ordered_json;

struct EvalConfig {
  DistanceKind distance = DistanceKind::kEuclidean;
  bool l2_normalize = false;
  std::optional<double> partial_min;  // partial-probe crop fraction range
  std::optional<double> partial_max;
  std::uint64_t partial_seed = 0;
  int batch_size = 32;
};

// Decoder is never run: retrieval pass only.
inline EmbeddingSet extract_embeddings(model::SanModel<float>& model, const datagen::LoadedSplit& split,
                                       bool l2_normalize = false, int batch_size = 32) {
  const int n = split.images.n();
  require_input(n > 0, "extract_embeddings: empty split");
  EmbeddingSet out;
  out.dim = model.config().encoder.feature_channels();
  out.values.reserve(static_cast<std::size_t>(n) * out.dim);
  for (int start = 0; start < n; start += batch_size) {
    std::vector<int> rows;
    for (int i = start; i < std::min(n, start + batch_size); ++i) rows.push_back(i);
    const auto res = model.forward(split.images.gather(rows), model::Pass::kRetrieval);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::vector<double> v(static_cast<std::size_t>(out.dim));
      for (int k = 0; k < out.dim; ++k) v[static_cast<std::size_t>(k)] = res.embedding.at(static_cast<int>(r), k, 0, 0);
      if (l2_normalize) {
        double s = 0;
        for (double x : v) s += x * x;
        if (s > 0)
          for (double& x : v) x /= std::sqrt(s);
      }
      out.values.insert(out.values.end(), v.begin(), v.end());
    }
  }
  out.sample_ids = split.sample_ids;
  out.identities = split.identities;
  out.views = split.views;
  return out;
}

struct ProbeCrop {
  std::string sample_id;
  double fraction = 1.0;
  int top = 0;
  int rows = 0;
};

struct PartialProbes {
  datagen::LoadedSplit split;
  std::vector<ProbeCrop> crops;
};

// Each query image is replaced by a horizontal band holding `fraction` of its area,
// resized back to the full resolution. Fraction 1 leaves the image untouched.
inline PartialProbes make_partial_probes(const datagen::LoadedSplit& queries, double min_fraction,
                                         double max_fraction, std::uint64_t seed) {
  require_config(min_fraction > 0 && max_fraction <= 1 && min_fraction <= max_fraction,
                 "crop fractions must satisfy 0 < min <= max <= 1");
  PartialProbes out;
  out.split = queries;
  Rng rng(derive_seed(seed, {0x9a271a1}));
  const int H = queries.images.h(), W = queries.images.w();
  for (int i = 0; i < queries.images.n(); ++i) {
    ProbeCrop crop;
    crop.sample_id = queries.sample_ids[static_cast<std::size_t>(i)];
    crop.fraction = min_fraction == max_fraction ? min_fraction : uniform(rng, min_fraction, max_fraction);
    crop.rows = std::clamp(static_cast<int>(std::lround(crop.fraction * H)), 1, H);
    crop.top = uniform_int(rng, 0, H - crop.rows);
    out.crops.push_back(crop);
    if (crop.rows == H) continue;
    const Image full = tensor_to_image(queries.images, i);
    Image band(crop.rows, W);
    for (int y = 0; y < crop.rows; ++y)
      for (int x = 0; x < W; ++x) band.set(y, x, full.pixel(crop.top + y, x));
    image_to_tensor(resize_bilinear(band, H, W), out.split.images, i);
  }
  return out;
}

struct MetricsReport {
  double cmc1 = 0, cmc5 = 0, cmc10 = 0, map = 0;
  int num_query = 0, num_gallery = 0;
  DistanceKind distance = DistanceKind::kEuclidean;
  std::vector<double> cmc_curve;
  std::vector<double> per_query_ap;
  json config;
};

inline json to_json(const MetricsReport& r) {
  return json{{"tool", kToolName},
              {"tool_version", kToolVersion},
              {"distance", to_string(r.distance)},
              {"num_query", r.num_query},
              {"num_gallery", r.num_gallery},
              {"cmc", {{"1", r.cmc1}, {"5", r.cmc5}, {"10", r.cmc10}}},
              {"map", r.map},
              {"cmc_curve", r.cmc_curve},
              {"config", r.config}};
}

inline MetricsReport compute_metrics(const EmbeddingSet& queries, const EmbeddingSet& gallery, DistanceKind kind) {
  const RankingResult ranking = rank_gallery(queries, gallery, kind);
  MetricsReport r;
  r.distance = kind;
  r.num_query = queries.rows();
  r.num_gallery = gallery.rows();
  r.cmc_curve = cmc_curve(ranking, queries.identities, gallery.identities);
  auto at = [&](int k) { return r.cmc_curve.empty() ? 0.0 : r.cmc_curve[std::min<std::size_t>(r.cmc_curve.size(), k) - 1]; };
  r.cmc1 = at(1);
  r.cmc5 = at(5);
  r.cmc10 = at(10);
  r.per_query_ap = per_query_average_precision(ranking, queries.identities, gallery.identities);
  r.map = mean_average_precision(ranking, queries.identities, gallery.identities);
  return r;
}

inline MetricsReport evaluate(model::SanModel<float>& model, const datagen::DatasetManifest& m, const EvalConfig& cfg,
                              json config_snapshot = json()) {
  datagen::LoadedSplit queries = datagen::load_split(m, datagen::Split::kQuery, false);
  const datagen::LoadedSplit gallery = datagen::load_split(m, datagen::Split::kGallery, false);
  if (queries.images.n() == 0 || gallery.images.n() == 0) throw DataError("dataset has an empty query or gallery split");
  json partial = nullptr;
  if (cfg.partial_min) {
    auto probes = make_partial_probes(queries, *cfg.partial_min, cfg.partial_max.value_or(*cfg.partial_min),
                                      cfg.partial_seed);
    queries = std::move(probes.split);
    partial = json{{"min_fraction", *cfg.partial_min},
                   {"max_fraction", cfg.partial_max.value_or(*cfg.partial_min)},
                   {"seed", cfg.partial_seed}};
  }
  const EmbeddingSet q = extract_embeddings(model, queries, cfg.l2_normalize, cfg.batch_size);
  const EmbeddingSet g = extract_embeddings(model, gallery, cfg.l2_normalize, cfg.batch_size);
  MetricsReport r = compute_metrics(q, g, cfg.distance);
  r.config = std::move(config_snapshot);
  r.config["distance"] = to_string(cfg.distance);
  r.config["l2_normalize"] = cfg.l2_normalize;
  r.config["partial"] = partial;
  return r;
}

}  // namespace san::eval
