// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/optim.hpp"

#include <cmath>
#include <numbers>

#include "attnpool/error.hpp"

namespace attnpool {

void ScheduleConfig::validate() const {
  if (!(peak_lr > 0.0)) throw ConfigError("schedule: peak learning rate must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("schedule: warmup fraction must be in [0, 1)");
  }
}

std::size_t warmup_steps(std::size_t total_steps, const ScheduleConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.warmup_fraction * static_cast<double>(total_steps)));
}

double cosine_lr(std::size_t step, std::size_t total_steps, const ScheduleConfig& cfg) {
  cfg.validate();
  if (total_steps == 0) throw ConfigError("cosine_lr: total steps must be > 0");
  if (step > total_steps) {
    throw ConfigError("cosine_lr: step " + std::to_string(step) + " beyond total " +
                      std::to_string(total_steps));
  }
  const std::size_t warmup = warmup_steps(total_steps, cfg);
  if (step < warmup) {
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (warmup >= total_steps) return 0.0;
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamW::AdamW(AdamWConfig config, std::span<const Shape> shapes) : config_(config) {
  for (const Shape& s : shapes) {
    m_.emplace_back(s);
    v_.emplace_back(s);
  }
}

void AdamW::step(std::span<Matrix* const> params, std::span<const Matrix> grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adamw: expected " + std::to_string(m_.size()) + " parameters, got " +
                     std::to_string(params.size()) + " parameters and " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (params[i]->shape() != m_[i].shape() || grads[i].shape() != m_[i].shape()) {
      throw ShapeError("adamw: parameter " + std::to_string(i) + " is " +
                       params[i]->shape().str() + " with gradient " + grads[i].shape().str() +
                       ", state is " + m_[i].shape().str());
    }
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double decay = 1.0 - lr * config_.weight_decay;
  for (std::size_t i = 0; i < m_.size(); ++i) {
    auto w = params[i]->values();
    auto g = grads[i].values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      w[j] *= decay;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace attnpool
