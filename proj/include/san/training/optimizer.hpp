// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "san/core/errors.hpp"
#include "san/model/checkpoint.hpp"
#include "san/nn/layers.hpp"

namespace san::training {

using json = nlohmann::ordered_json;

struct OptimizerConfig {
  std::string kind = "adam";
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
  std::string schedule = "cosine";

  void validate() const {
    require_config(kind == "adam", "unsupported optimizer '" + kind + "' (only adam)");
    require_config(schedule == "cosine" || schedule == "constant", "schedule must be cosine or constant");
    require_config(lr > 0 && beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && eps > 0 && weight_decay >= 0,
                   "invalid optimizer hyper-parameters");
  }
};

inline void to_json(json& j, const OptimizerConfig& c) {
  j = json{{"kind", c.kind},       {"lr", c.lr},   {"beta1", c.beta1},
           {"beta2", c.beta2},     {"eps", c.eps}, {"weight_decay", c.weight_decay},
           {"schedule", c.schedule}};
}
inline void from_json(const json& j, OptimizerConfig& c) {
  OptimizerConfig d;
  c.kind = j.value("kind", d.kind);
  c.lr = j.value("lr", d.lr);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.eps = j.value("eps", d.eps);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.schedule = j.value("schedule", d.schedule);
}

// Adam with bias correction and a cosine learning-rate decay to zero (no warmup).
class Adam {
 public:
  Adam(nn::ParamList<float> params, OptimizerConfig cfg, int total_steps)
      : cfg_(std::move(cfg)), total_steps_(total_steps) {
    cfg_.validate();
    require_config(total_steps > 0, "optimizer needs a positive step count");
    for (auto* p : params) {
      if (!p->trainable) continue;
      params_.push_back(p);
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  double learning_rate(int step) const {
    if (cfg_.schedule == "constant") return cfg_.lr;
    const double t = std::min(1.0, static_cast<double>(step) / total_steps_);
    return cfg_.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  }

  int steps_taken() const { return steps_; }

  void step() {
    const double lr = learning_rate(steps_);
    ++steps_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, steps_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, steps_);
    const auto b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
    const auto step_size = static_cast<float>(lr / bc1);
    const auto inv_bc2 = static_cast<float>(1.0 / bc2);
    const auto eps = static_cast<float>(cfg_.eps);
    const auto decay = static_cast<float>(lr * cfg_.weight_decay);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto* p = params_[i];
      float* w = p->value.data();
      const float* g = p->grad.data();
      float* m = m_[i].data();
      float* v = v_[i].data();
      for (std::size_t k = 0; k < p->value.size(); ++k) {
        m[k] = b1 * m[k] + (1 - b1) * g[k];
        v[k] = b2 * v[k] + (1 - b2) * g[k] * g[k];
        w[k] -= step_size * m[k] / (std::sqrt(v[k] * inv_bc2) + eps) + decay * w[k];
      }
    }
  }

  void export_state(model::Checkpoint& ck) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      ck.tensors.emplace_back("optim.m." + params_[i]->name, m_[i]);
      ck.tensors.emplace_back("optim.v." + params_[i]->name, v_[i]);
    }
    ck.texts["optim.steps"] = std::to_string(steps_);
  }

  void import_state(const model::Checkpoint& ck) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto* m = ck.find("optim.m." + params_[i]->name);
      const auto* v = ck.find("optim.v." + params_[i]->name);
      if (!m || !v) throw ConfigError("checkpoint lacks optimizer state for " + params_[i]->name);
      m_[i] = *m;
      v_[i] = *v;
    }
    auto it = ck.texts.find("optim.steps");
    if (it == ck.texts.end()) throw ConfigError("checkpoint lacks optimizer step count");
    steps_ = std::stoi(it->second);
  }

 private:
  OptimizerConfig cfg_;
  int total_steps_;
  int steps_ = 0;
  std::vector<nn::Parameter<float>*> params_;
  std::vector<Tensor<float>> m_, v_;
};

}  // namespace san::training
