// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include "attnpool/error.hpp"
#include "attnpool/seed.hpp"

namespace attnpool {

double cross_entropy(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw IndexError("cross_entropy: label " + std::to_string(label) + " outside " +
                     std::to_string(probs.size()) + " classes");
  }
  return -std::log(std::max(probs[label], 1e-12));
}

Var cross_entropy(Var probs, std::size_t label) { return neg_log_pick(probs, label, 1e-12); }

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (jobs < 1) throw ConfigError("train: jobs must be >= 1");
  schedule.validate();
}

std::vector<std::size_t> manifest_labels(const DatasetManifest& manifest) {
  std::vector<std::size_t> labels;
  labels.reserve(manifest.records.size());
  for (const auto& r : manifest.records) labels.push_back(r.label);
  return labels;
}

TrainResult train_model(const FeatureSource& features, std::span<const std::size_t> labels,
                        std::span<const std::size_t> records, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, std::uint64_t seed) {
  train_cfg.validate();
  if (records.empty()) throw DataError("train: empty training split");
  for (std::size_t r : records) {
    if (r >= labels.size() || r >= features.size()) {
      throw IndexError("train: record " + std::to_string(r) + " outside the dataset");
    }
    if (labels[r] >= model_cfg.num_classes) {
      throw IndexError("train: label " + std::to_string(labels[r]) + " of record " +
                       std::to_string(r) + " outside " + std::to_string(model_cfg.num_classes) +
                       " classes");
    }
  }

  TrainResult result{HeadModel::initialize(model_cfg, derive_seed(seed, 0)), {}, 0.0};
  HeadModel& model = result.model;
  Rng rng(derive_seed(seed, 1));

  std::vector<Matrix*> params;
  std::vector<Shape> shapes;
  for (auto& p : model.parameters()) {
    params.push_back(p.value);
    shapes.push_back(p.value->shape());
  }
  AdamW optimizer(train_cfg.adamw, shapes);
  std::vector<Matrix> grads(shapes.begin(), shapes.end());

  const std::size_t n = records.size();
  const std::size_t batch = train_cfg.batch_size;
  const std::size_t batches_per_epoch = (n + batch - 1) / batch;
  const std::size_t total_steps = train_cfg.epochs * batches_per_epoch;
  std::vector<std::size_t> order(records.begin(), records.end());
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    double lr = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::span<const std::size_t> members(order.data() + start, stop - start);
      if (train_cfg.observer) train_cfg.observer(epoch, members);

      Tape tape;
      BoundModel bound = bind(tape, model, true);
      const ForwardOptions options{true, &rng};
      Var batch_loss;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const std::size_t r = members[i];
        Var probs = forward(tape.constant(features.get(r)), bound, options);
        Var loss = cross_entropy(probs, labels[r]);
        loss_sum += loss.value()[0];
        if (argmax(probs.value().values()) == labels[r]) ++correct;
        batch_loss = i == 0 ? loss : add(batch_loss, loss);
      }
      tape.backward(batch_loss, 1.0 / static_cast<double>(members.size()));
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = tape.grad(bound.all[i]);

      lr = cosine_lr(step, total_steps, train_cfg.schedule);
      optimizer.step(params, grads, lr);
      ++step;
    }
    result.history.push_back({epoch + 1, loss_sum / static_cast<double>(n),
                              static_cast<double>(correct) / static_cast<double>(n), lr});
  }

  const auto predicted = predict_records(model, features, records);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < records.size(); ++i) hits += predicted[i] == labels[records[i]];
  result.train_accuracy = static_cast<double>(hits) / static_cast<double>(n);
  return result;
}

TrainResult train_fold(const DatasetManifest& manifest, const FeatureSource& features,
                       std::size_t fold, const ModelConfig& model_cfg,
                       const TrainConfig& train_cfg) {
  if (model_cfg.num_classes != manifest.num_classes()) {
    throw ConfigError("train: model has " + std::to_string(model_cfg.num_classes) +
                      " classes, manifest has " + std::to_string(manifest.num_classes()));
  }
  if (features.size() != manifest.records.size()) {
    throw DataError("train: " + std::to_string(features.size()) + " feature matrices for " +
                    std::to_string(manifest.records.size()) + " records");
  }
  const FoldSplit split = split_fold(manifest, fold);
  if (split.train.empty()) {
    throw DataError("train: fold " + std::to_string(fold) + " leaves no training records");
  }
  const auto labels = manifest_labels(manifest);
  return train_model(features, labels, split.train, model_cfg, train_cfg,
                     derive_seed(train_cfg.seed, fold));
}

std::vector<std::size_t> predict_records(const HeadModel& model, const FeatureSource& features,
                                         std::span<const std::size_t> records) {
  std::vector<std::size_t> out;
  out.reserve(records.size());
  for (std::size_t r : records) out.push_back(argmax(predict(model, features.get(r)).values()));
  return out;
}

ConfusionMatrix evaluate(const HeadModel& model, const FeatureSource& features,
                         std::span<const std::size_t> labels,
                         std::span<const std::size_t> records,
                         std::vector<std::string> class_names) {
  const auto predicted = predict_records(model, features, records);
  ConfusionMatrix c(std::move(class_names));
  for (std::size_t i = 0; i < records.size(); ++i) c.add(labels[records[i]], predicted[i]);
  return c;
}

CrossValidationResult cross_validate(const DatasetManifest& manifest,
                                     const FeatureSource& features, const ModelConfig& model_cfg,
                                     const TrainConfig& train_cfg) {
  train_cfg.validate();
  const std::size_t k = manifest.fold_count;
  if (k < 2) throw ConfigError("cross_validate: need at least 2 folds, manifest has " +
                               std::to_string(k));
  const auto labels = manifest_labels(manifest);

  CrossValidationResult result;
  std::vector<std::optional<FoldReport>> reports(k);
  result.histories.resize(k);
  result.train_accuracy.resize(k);

  auto run_fold = [&](std::size_t fold) {
    TrainResult trained = train_fold(manifest, features, fold, model_cfg, train_cfg);
    const FoldSplit split = split_fold(manifest, fold);
    if (split.test.empty()) {
      throw DataError("cross_validate: fold " + std::to_string(fold) + " has no test records");
    }
    reports[fold] = make_fold_report(
        fold, evaluate(trained.model, features, labels, split.test, manifest.class_names));
    result.histories[fold] = std::move(trained.history);
    result.train_accuracy[fold] = trained.train_accuracy;
  };

  const std::size_t workers = std::min(train_cfg.jobs, k);
  if (workers <= 1) {
    for (std::size_t fold = 0; fold < k; ++fold) run_fold(fold);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t error_fold = k;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t fold = next++; fold < k; fold = next++) {
          try {
            run_fold(fold);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (fold < error_fold) {
              error_fold = fold;
              first_error = std::current_exception();
            }
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  for (auto& r : reports) result.folds.push_back(std::move(*r));
  result.aggregate = aggregate(result.folds);
  return result;
}

}  // namespace attnpool
