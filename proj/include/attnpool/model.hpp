// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "attnpool/matrix.hpp"
#include "attnpool/tape.hpp"

namespace attnpool {

enum class PoolingMethod { kMean, kAttentive, kQkv };

std::string_view to_string(PoolingMethod method);
/// Accepts "mean", "attentive", "qkv"; throws ConfigError otherwise.
PoolingMethod parse_pooling(std::string_view name);

struct ModelConfig {
  std::size_t d_enc = 768;
  std::size_t d_model = 256;
  std::size_t num_heads = 6;
  std::size_t d_hidden = 4;
  std::size_t num_classes = 4;
  PoolingMethod pooling = PoolingMethod::kQkv;
  double dropout_rate = 0.1;
  int encoder_layer = 0;  // informational

  void validate() const;
};

/// Frame scorer e_t = tanh(h_t W1 + b) w2 + k plus its value map.
struct AttentiveHeadParams {
  Matrix score_weight;  // W1: d_model x d_hidden
  Matrix score_bias;    // b: 1 x d_hidden
  Matrix score_vector;  // w2: d_hidden x 1
  Matrix score_offset;  // k: 1 x 1
  Matrix value;         // W^V: d_model x d_hidden
};

struct QkvHeadParams {
  Matrix query;  // d_model x d_hidden
  Matrix key;    // d_model x d_hidden
  Matrix value;  // d_model x d_hidden
};

struct NamedParameter {
  std::string name;
  Matrix* value;
};

struct ConstNamedParameter {
  std::string name;
  const Matrix* value;
};

/// Trainable head on top of a frozen encoder: bias-free projector, one of the
/// pooling methods, and a bias-free classifier. Only the parameters of the
/// configured pooling method are allocated.
class HeadModel {
 public:
  /// Allocates every parameter as zeros.
  explicit HeadModel(const ModelConfig& config);

  /// Glorot-uniform matrices (+-sqrt(6 / (fan_in + fan_out))), zero biases
  /// and offsets.
  static HeadModel initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  /// Stable order: projector, per-head parameters, output, classifier.
  std::vector<NamedParameter> parameters();
  std::vector<ConstNamedParameter> parameters() const;
  std::size_t parameter_count() const;

  Matrix projector;  // d_enc x d_model
  std::vector<AttentiveHeadParams> attentive;
  std::vector<QkvHeadParams> qkv;
  Matrix output;      // (num_heads * d_hidden) x d_model, attention methods only
  Matrix classifier;  // d_model x num_classes

 private:
  ModelConfig config_;
};

/// Exact number of trainable scalars for `config`, in closed form.
std::size_t count_trainable_params(const ModelConfig& config);

// --- differentiable forward pass -------------------------------------------

struct BoundAttentiveHead {
  Var score_weight, score_bias, score_vector, score_offset, value;
};

struct BoundQkvHead {
  Var query, key, value;
};

/// A HeadModel's parameters registered on a tape.
struct BoundModel {
  const ModelConfig* config = nullptr;
  Var projector;
  std::vector<BoundAttentiveHead> attentive;
  std::vector<BoundQkvHead> qkv;
  Var output;
  Var classifier;
  /// Same order as HeadModel::parameters().
  std::vector<Var> all;
};

/// Copies the model onto `tape`. When `trainable` is false the parameters are
/// constants and no gradients are tracked.
BoundModel bind(Tape& tape, const HeadModel& model, bool trainable = true);

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;  // required when training with dropout
};

/// Per-head attention weights (1 x T each) captured during pooling.
struct PoolTrace {
  std::vector<Var> head_weights;
};

/// standardize_rows(H_enc W_p): T x d_enc -> T x d_model.
Var project(Var encoded, const BoundModel& model);
/// Arithmetic mean over frames: T x d -> 1 x d.
Var mean_pool(Var frames);
/// Multi-head attentive average pooling: T x d_model -> 1 x d_model.
Var attentive_pool(Var frames, const BoundModel& model, const ForwardOptions& options,
                   PoolTrace* trace = nullptr);
/// Multi-head QKV pooling with the query taken from the frame mean.
Var qkv_pool(Var frames, const BoundModel& model, PoolTrace* trace = nullptr);
/// Dispatches on the configured pooling method.
Var pool(Var frames, const BoundModel& model, const ForwardOptions& options,
         PoolTrace* trace = nullptr);
/// softmax(a W_c): 1 x d_model -> 1 x num_classes.
Var classify(Var pooled, const BoundModel& model);
/// classify(pool(project(encoded))).
Var forward(Var encoded, const BoundModel& model, const ForwardOptions& options,
            PoolTrace* trace = nullptr);

/// Evaluation-mode class probabilities (1 x num_classes).
Matrix predict(const HeadModel& model, const Matrix& encoded);
std::size_t argmax(std::span<const double> values);

}  // namespace attnpool
