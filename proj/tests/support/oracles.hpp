// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "attnpool/matrix.hpp"
#include "attnpool/model.hpp"

namespace attnpool::oracle {

using Vec = std::vector<double>;
using Grid = std::vector<Vec>;

Grid to_grid(const Matrix& m);

/// Plain-loop evaluation of the head in eval mode (no dropout).
struct NaiveOutput {
  Grid projected;        // T x d_model
  Vec pooled;            // d_model
  Grid head_weights;     // heads x T, empty for mean pooling
  Vec probabilities;     // num_classes
};

NaiveOutput naive_forward(const HeadModel& model, const Matrix& encoded);

/// Central difference of `f` with respect to every entry of `x`.
Matrix numeric_gradient(const std::function<double()>& f, Matrix& x, double h = 1e-6);

/// Max of |a - b| / max(floor, |a|, |b|) over all entries.
double max_relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-3);

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0);

/// Random model with non-zero biases and offsets.
HeadModel random_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace attnpool::oracle
