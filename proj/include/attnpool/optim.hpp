// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attnpool/matrix.hpp"

namespace attnpool {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

struct ScheduleConfig {
  double peak_lr = 1e-4;
  double warmup_fraction = 0.10;

  void validate() const;
};

/// round(warmup_fraction * total_steps).
std::size_t warmup_steps(std::size_t total_steps, const ScheduleConfig& cfg);

/// Linear warmup from 0 to peak over the warmup steps, then half-cosine decay
/// reaching 0 at `total_steps`. Throws ConfigError when total_steps == 0 or
/// step > total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, const ScheduleConfig& cfg);

/// Decoupled weight decay Adam:
///   w <- w * (1 - lr * lambda) - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  AdamW(AdamWConfig config, std::span<const Shape> shapes);

  /// Throws ShapeError when the parameter/gradient lists do not line up with
  /// the shapes given at construction.
  void step(std::span<Matrix* const> params, std::span<const Matrix> grads, double lr);

  std::size_t steps() const { return steps_; }
  const Matrix& first_moment(std::size_t i) const { return m_[i]; }
  const Matrix& second_moment(std::size_t i) const { return v_[i]; }
  const AdamWConfig& config() const { return config_; }

 private:
  AdamWConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t steps_ = 0;
};

}  // namespace attnpool
