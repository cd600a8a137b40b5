// Copyright 2026 The vrads Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <string>
#include <unordered_map>

#include "vrads/errors.hpp"
#include "vrads/trainer.hpp"

namespace vrads {

NAdam::NAdam(ParamList params, NAdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.lr > 0.0) || !(config_.eps > 0.0)) {
    throw ConfigError("NAdam needs a positive learning rate and epsilon");
  }
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    throw ConfigError("NAdam betas must lie in [0, 1)");
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Param* p : params_) {
    m_.push_back(Tensor::zeros(p->value.shape()));
    v_.push_back(Tensor::zeros(p->value.shape()));
  }
}

void NAdam::step(std::span<const Tensor> grads) {
  if (grads.size() != params_.size()) {
    throw ShapeError("NAdam got " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != params_[i]->value.shape()) {
      throw ShapeError("gradient shape " + grads[i].shape().str() + " does not match " +
                       params_[i]->name + " " + params_[i]->value.shape().str());
    }
    for (double g : grads[i].values()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient for " + params_[i]->name);
    }
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(b1, t + 1.0);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto g = grads[i].values();
    std::vector<double>& m = m_[i].mutable_values();
    std::vector<double>& v = v_[i].mutable_values();
    std::vector<double>& p = params_[i]->value.mutable_values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = (b1 * m[k] + (1.0 - b1) * g[k]) / c1;
      const double v_hat = v[k] / c2;
      p[k] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

NamedTensors NAdam::state(const std::string& prefix) const {
  NamedTensors out;
  out.reserve(2 * params_.size() + 1);
  out.emplace_back(prefix + "step", Tensor::scalar(static_cast<double>(steps_)));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.emplace_back(prefix + "m." + params_[i]->name, m_[i]);
    out.emplace_back(prefix + "v." + params_[i]->name, v_[i]);
  }
  return out;
}

void NAdam::load_state(const std::string& prefix, const NamedTensors& tensors) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  auto find = [&](const std::string& name, const Shape& shape) -> const Tensor& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("optimizer state lacks " + name);
    if (it->second->shape() != shape) throw ShapeError("optimizer state " + name + " has shape " +
                                                       it->second->shape().str());
    return *it->second;
  };
  const double step = find(prefix + "step", Shape{}).item();
  if (!(step >= 0.0) || step != std::floor(step)) throw DataError("bad optimizer step counter");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Shape& shape = params_[i]->value.shape();
    m_[i] = find(prefix + "m." + params_[i]->name, shape).detach();
    v_[i] = find(prefix + "v." + params_[i]->name, shape).detach();
  }
  steps_ = static_cast<std::size_t>(step);
}

double clip_grad_norm(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads) {
    for (double x : g.values()) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor& g : grads) {
      Tensor scaled = g.detach();
      for (double& x : scaled.mutable_values()) x *= s;
      g = std::move(scaled);
    }
  }
  return norm;
}

}  // namespace vrads
