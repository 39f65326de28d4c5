// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "attnpool/seed.hpp"
#include "attnpool/training.hpp"

namespace attnpool {

bool GradcheckReport::passed() const {
  return std::all_of(tensors.begin(), tensors.end(),
                     [](const TensorCheck& t) { return t.passed; });
}

namespace {

double loss_of(const HeadModel& model, const Matrix& input, std::size_t label, bool training,
               std::uint64_t dropout_seed) {
  Tape tape;
  BoundModel bound = bind(tape, model, false);
  Rng rng(dropout_seed);
  Var probs = forward(tape.constant(input), bound, ForwardOptions{training, &rng});
  return cross_entropy(probs, label).value()[0];
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& o) {
  ModelConfig cfg;
  cfg.d_enc = o.d_enc;
  cfg.d_model = o.d_model;
  cfg.num_heads = o.num_heads;
  cfg.d_hidden = o.d_hidden;
  cfg.num_classes = o.num_classes;
  cfg.pooling = o.pooling;
  cfg.dropout_rate = o.training ? 0.1 : 0.0;

  HeadModel model = HeadModel::initialize(cfg, derive_seed(o.seed, 0));
  Rng rng(derive_seed(o.seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  // Non-zero biases and offsets so their gradients are exercised away from 0.
  for (auto& p : model.parameters()) {
    if (p.name.ends_with("score_bias") || p.name.ends_with("score_offset")) {
      for (double& v : p.value->values()) v = 0.5 * normal(rng);
    }
  }
  Matrix input(o.frames, o.d_enc);
  for (double& v : input.values()) v = normal(rng);
  const std::size_t label = std::uniform_int_distribution<std::size_t>(0, o.num_classes - 1)(rng);
  const std::uint64_t dropout_seed = derive_seed(o.seed, 2);

  std::vector<Matrix> analytic;
  {
    Tape tape;
    BoundModel bound = bind(tape, model, true);
    Rng mask_rng(dropout_seed);
    Var probs = forward(tape.constant(input), bound, ForwardOptions{o.training, &mask_rng});
    Var loss = cross_entropy(probs, label);
    tape.backward(loss);
    for (Var v : bound.all) analytic.push_back(tape.grad(v));
  }

  GradcheckReport report{o.pooling, o.training, {}};
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    TensorCheck check{params[i].name, params[i].value->size(), 0.0, 0.0, true};
    auto values = params[i].value->values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + o.step;
      const double up = loss_of(model, input, label, o.training, dropout_seed);
      values[j] = saved - o.step;
      const double down = loss_of(model, input, label, o.training, dropout_seed);
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * o.step);
      const double a = analytic[i].values()[j];
      const double abs_err = std::abs(a - numeric);
      const double rel_err = abs_err / std::max({o.scale_floor, std::abs(a), std::abs(numeric)});
      check.max_abs_error = std::max(check.max_abs_error, abs_err);
      check.max_rel_error = std::max(check.max_rel_error, rel_err);
    }
    check.passed = check.max_rel_error <= o.tolerance;
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace attnpool
