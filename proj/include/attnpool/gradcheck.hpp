// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "attnpool/model.hpp"

namespace attnpool {

struct GradcheckOptions {
  PoolingMethod pooling = PoolingMethod::kQkv;
  std::size_t d_enc = 10;
  std::size_t d_model = 8;
  std::size_t frames = 7;
  std::size_t num_heads = 2;
  std::size_t d_hidden = 3;
  std::size_t num_classes = 4;
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Error denominator floor: |analytic - numeric| / max(floor, |analytic|, |numeric|).
  double scale_floor = 1e-3;
  /// Checks the training-mode graph, dropout included, with a fixed mask.
  bool training = false;
  std::uint64_t seed = 1;
};

struct TensorCheck {
  std::string name;
  std::size_t entries = 0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  PoolingMethod pooling = PoolingMethod::kQkv;
  bool training = false;
  std::vector<TensorCheck> tensors;

  bool passed() const;
};

/// Compares tape gradients of the cross-entropy loss of one random utterance
/// against central finite differences, for every parameter tensor.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace attnpool
