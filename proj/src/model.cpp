// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/model.hpp"

#include <algorithm>
#include <cmath>

#include "attnpool/error.hpp"

namespace attnpool {

std::string_view to_string(PoolingMethod method) {
  switch (method) {
    case PoolingMethod::kMean: return "mean";
    case PoolingMethod::kAttentive: return "attentive";
    case PoolingMethod::kQkv: return "qkv";
  }
  return "unknown";
}

PoolingMethod parse_pooling(std::string_view name) {
  if (name == "mean") return PoolingMethod::kMean;
  if (name == "attentive") return PoolingMethod::kAttentive;
  if (name == "qkv") return PoolingMethod::kQkv;
  throw ConfigError("unknown pooling method '" + std::string(name) +
                    "' (expected mean, attentive or qkv)");
}

void ModelConfig::validate() const {
  if (d_enc < 1) throw ConfigError("model: d_enc must be >= 1");
  if (d_model < 1) throw ConfigError("model: d_model must be >= 1");
  if (num_heads < 1) throw ConfigError("model: num_heads must be >= 1");
  if (d_hidden < 1) throw ConfigError("model: d_hidden must be >= 1");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("model: dropout rate must be in [0, 1)");
  }
}

HeadModel::HeadModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const auto& c = config_;
  projector = Matrix(c.d_enc, c.d_model);
  if (c.pooling == PoolingMethod::kAttentive) {
    attentive.resize(c.num_heads);
    for (auto& h : attentive) {
      h.score_weight = Matrix(c.d_model, c.d_hidden);
      h.score_bias = Matrix(1, c.d_hidden);
      h.score_vector = Matrix(c.d_hidden, 1);
      h.score_offset = Matrix(1, 1);
      h.value = Matrix(c.d_model, c.d_hidden);
    }
  } else if (c.pooling == PoolingMethod::kQkv) {
    qkv.resize(c.num_heads);
    for (auto& h : qkv) {
      h.query = Matrix(c.d_model, c.d_hidden);
      h.key = Matrix(c.d_model, c.d_hidden);
      h.value = Matrix(c.d_model, c.d_hidden);
    }
  }
  if (c.pooling != PoolingMethod::kMean) output = Matrix(c.num_heads * c.d_hidden, c.d_model);
  classifier = Matrix(c.d_model, c.num_classes);
}

HeadModel HeadModel::initialize(const ModelConfig& config, std::uint64_t seed) {
  HeadModel model(config);
  Rng rng(seed);
  for (auto& p : model.parameters()) {
    Matrix& m = *p.value;
    // Biases and scalar offsets start at zero.
    if (p.name.ends_with("score_bias") || p.name.ends_with("score_offset")) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (double& v : m.values()) v = uniform(rng);
  }
  return model;
}

std::vector<NamedParameter> HeadModel::parameters() {
  std::vector<NamedParameter> out;
  out.push_back({"projector", &projector});
  for (std::size_t i = 0; i < attentive.size(); ++i) {
    const std::string prefix = "head" + std::to_string(i) + ".";
    auto& h = attentive[i];
    out.push_back({prefix + "score_weight", &h.score_weight});
    out.push_back({prefix + "score_bias", &h.score_bias});
    out.push_back({prefix + "score_vector", &h.score_vector});
    out.push_back({prefix + "score_offset", &h.score_offset});
    out.push_back({prefix + "value", &h.value});
  }
  for (std::size_t i = 0; i < qkv.size(); ++i) {
    const std::string prefix = "head" + std::to_string(i) + ".";
    auto& h = qkv[i];
    out.push_back({prefix + "query", &h.query});
    out.push_back({prefix + "key", &h.key});
    out.push_back({prefix + "value", &h.value});
  }
  if (!output.empty()) out.push_back({"output", &output});
  out.push_back({"classifier", &classifier});
  return out;
}

std::vector<ConstNamedParameter> HeadModel::parameters() const {
  std::vector<ConstNamedParameter> out;
  for (auto& p : const_cast<HeadModel*>(this)->parameters()) out.push_back({p.name, p.value});
  return out;
}

std::size_t HeadModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : parameters()) total += p.value->size();
  return total;
}

std::size_t count_trainable_params(const ModelConfig& c) {
  c.validate();
  std::size_t total = c.d_enc * c.d_model + c.d_model * c.num_classes;
  switch (c.pooling) {
    case PoolingMethod::kMean:
      break;
    case PoolingMethod::kAttentive:
      total += c.num_heads * (2 * c.d_model * c.d_hidden + 2 * c.d_hidden + 1);
      total += c.num_heads * c.d_hidden * c.d_model;
      break;
    case PoolingMethod::kQkv:
      total += c.num_heads * 3 * c.d_model * c.d_hidden;
      total += c.num_heads * c.d_hidden * c.d_model;
      break;
  }
  return total;
}

// ---------------------------------------------------------------------------

BoundModel bind(Tape& tape, const HeadModel& model, bool trainable) {
  auto put = [&](const Matrix& m) {
    Var v = trainable ? tape.parameter(m) : tape.constant(m);
    return v;
  };
  BoundModel b;
  b.config = &model.config();
  b.projector = put(model.projector);
  b.all.push_back(b.projector);
  for (const auto& h : model.attentive) {
    BoundAttentiveHead bh{put(h.score_weight), put(h.score_bias), put(h.score_vector),
                          put(h.score_offset), put(h.value)};
    b.all.insert(b.all.end(),
                 {bh.score_weight, bh.score_bias, bh.score_vector, bh.score_offset, bh.value});
    b.attentive.push_back(bh);
  }
  for (const auto& h : model.qkv) {
    BoundQkvHead bh{put(h.query), put(h.key), put(h.value)};
    b.all.insert(b.all.end(), {bh.query, bh.key, bh.value});
    b.qkv.push_back(bh);
  }
  if (!model.output.empty()) {
    b.output = put(model.output);
    b.all.push_back(b.output);
  }
  b.classifier = put(model.classifier);
  b.all.push_back(b.classifier);
  return b;
}

Var project(Var encoded, const BoundModel& model) {
  if (encoded.shape().cols != model.config->d_enc) {
    throw ShapeError("project: input " + encoded.shape().str() + " but model d_enc is " +
                     std::to_string(model.config->d_enc));
  }
  return standardize_rows(matmul(encoded, model.projector));
}

Var mean_pool(Var frames) { return mean_rows(frames); }

namespace {

void require_frames(Var frames, const BoundModel& model, const char* op) {
  if (frames.shape().rows == 0 || frames.shape().cols != model.config->d_model) {
    throw ShapeError(std::string(op) + ": frames " + frames.shape().str() +
                     " but model d_model is " + std::to_string(model.config->d_model));
  }
}

}  // namespace

Var attentive_pool(Var frames, const BoundModel& model, const ForwardOptions& options,
                   PoolTrace* trace) {
  require_frames(frames, model, "attentive_pool");
  if (model.attentive.empty()) throw ConfigError("attentive_pool: model has no attentive heads");
  const auto& cfg = *model.config;
  const std::size_t heads = model.attentive.size();
  const std::size_t dh = cfg.d_hidden;
  const bool use_dropout = options.training && cfg.dropout_rate > 0.0;
  if (use_dropout && options.rng == nullptr) {
    throw ConfigError("attentive_pool: training with dropout needs an rng");
  }

  // All heads share one wide product per projection; each head then reads its
  // own column block.
  std::vector<Var> w1, b1, wv;
  for (const auto& h : model.attentive) {
    w1.push_back(h.score_weight);
    b1.push_back(h.score_bias);
    wv.push_back(h.value);
  }
  Var hidden = tanh(add_row_broadcast(matmul(frames, concat_cols(w1)), concat_cols(b1)));
  if (use_dropout) hidden = dropout(hidden, cfg.dropout_rate, *options.rng, true);
  Var values = matmul(frames, concat_cols(wv));

  std::vector<Var> head_out;
  head_out.reserve(heads);
  for (std::size_t i = 0; i < heads; ++i) {
    const auto& h = model.attentive[i];
    Var scores = add_row_broadcast(matmul(slice_cols(hidden, i * dh, dh), h.score_vector),
                                   h.score_offset);  // T x 1
    Var weights = row_softmax(transpose(scores));    // 1 x T
    if (trace) trace->head_weights.push_back(weights);
    head_out.push_back(matmul(weights, slice_cols(values, i * dh, dh)));
  }
  return matmul(concat_cols(head_out), model.output);
}

Var qkv_pool(Var frames, const BoundModel& model, PoolTrace* trace) {
  require_frames(frames, model, "qkv_pool");
  if (model.qkv.empty()) throw ConfigError("qkv_pool: model has no qkv heads");
  const auto& cfg = *model.config;
  const std::size_t heads = model.qkv.size();
  const std::size_t dh = cfg.d_hidden;

  std::vector<Var> wq, wk, wv;
  for (const auto& h : model.qkv) {
    wq.push_back(h.query);
    wk.push_back(h.key);
    wv.push_back(h.value);
  }
  Var mu = mean_rows(frames);
  Var queries = matmul(mu, concat_cols(wq));  // 1 x heads*dh
  Var keys = matmul(frames, concat_cols(wk));
  Var values = matmul(frames, concat_cols(wv));
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<Var> head_out;
  head_out.reserve(heads);
  for (std::size_t i = 0; i < heads; ++i) {
    Var q = slice_cols(queries, i * dh, dh);
    Var k = slice_cols(keys, i * dh, dh);
    Var scores = scale(matmul(q, transpose(k)), inv_sqrt_dk);  // 1 x T
    Var weights = row_softmax(scores);
    if (trace) trace->head_weights.push_back(weights);
    head_out.push_back(matmul(weights, slice_cols(values, i * dh, dh)));
  }
  return matmul(concat_cols(head_out), model.output);
}

Var pool(Var frames, const BoundModel& model, const ForwardOptions& options, PoolTrace* trace) {
  switch (model.config->pooling) {
    case PoolingMethod::kMean: return mean_pool(frames);
    case PoolingMethod::kAttentive: return attentive_pool(frames, model, options, trace);
    case PoolingMethod::kQkv: return qkv_pool(frames, model, trace);
  }
  throw ConfigError("pool: unknown pooling method");
}

Var classify(Var pooled, const BoundModel& model) {
  if (pooled.shape() != Shape{1, model.config->d_model}) {
    throw ShapeError("classify: pooled vector " + pooled.shape().str() + " but d_model is " +
                     std::to_string(model.config->d_model));
  }
  return row_softmax(matmul(pooled, model.classifier));
}

Var forward(Var encoded, const BoundModel& model, const ForwardOptions& options,
            PoolTrace* trace) {
  return classify(pool(project(encoded, model), model, options, trace), model);
}

Matrix predict(const HeadModel& model, const Matrix& encoded) {
  Tape tape;
  BoundModel bound = bind(tape, model, false);
  return forward(tape.constant(encoded), bound, ForwardOptions{}).value();
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) -
                                   values.begin());
}

}  // namespace attnpool
