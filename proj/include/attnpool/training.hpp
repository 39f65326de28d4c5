// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "attnpool/feature_source.hpp"
#include "attnpool/manifest.hpp"
#include "attnpool/metrics.hpp"
#include "attnpool/model.hpp"
#include "attnpool/optim.hpp"

namespace attnpool {

/// -log(max(probs[label], 1e-12)). Throws IndexError when label is out of range.
double cross_entropy(std::span<const double> probs, std::size_t label);
Var cross_entropy(Var probs, std::size_t label);

/// Called once per optimizer step with the record indices of the batch.
using BatchObserver = std::function<void(std::size_t epoch, std::span<const std::size_t> batch)>;

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  ScheduleConfig schedule;
  AdamWConfig adamw;
  std::uint64_t seed = 0;
  /// Folds trained concurrently by cross_validate. With jobs > 1 the observer
  /// is called from several threads.
  std::size_t jobs = 1;
  BatchObserver observer;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  /// Accuracy of the training-mode predictions made while fitting.
  double running_accuracy = 0.0;
  double final_lr = 0.0;
};

struct TrainResult {
  HeadModel model;
  std::vector<EpochStats> history;
  /// Dropout-off accuracy of the final model on the training records.
  double train_accuracy = 0.0;
};

/// Trains a freshly initialized model on `records` (indices into `features`
/// and `labels`). Weights come from derive_seed(seed, 0), shuffling and
/// dropout from derive_seed(seed, 1). Throws DataError when `records` is empty.
TrainResult train_model(const FeatureSource& features, std::span<const std::size_t> labels,
                        std::span<const std::size_t> records, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, std::uint64_t seed);

/// Trains on every record whose fold differs from `fold`, seeded by
/// derive_seed(train_cfg.seed, fold).
TrainResult train_fold(const DatasetManifest& manifest, const FeatureSource& features,
                       std::size_t fold, const ModelConfig& model_cfg,
                       const TrainConfig& train_cfg);

/// Dropout-off predictions for `records`.
std::vector<std::size_t> predict_records(const HeadModel& model, const FeatureSource& features,
                                         std::span<const std::size_t> records);

ConfusionMatrix evaluate(const HeadModel& model, const FeatureSource& features,
                         std::span<const std::size_t> labels,
                         std::span<const std::size_t> records,
                         std::vector<std::string> class_names);

struct CrossValidationResult {
  std::vector<FoldReport> folds;
  Aggregate aggregate;
  std::vector<std::vector<EpochStats>> histories;
  std::vector<double> train_accuracy;
};

/// One train_fold plus held-out evaluation per fold. Throws ConfigError when
/// the manifest has fewer than two folds.
CrossValidationResult cross_validate(const DatasetManifest& manifest,
                                     const FeatureSource& features, const ModelConfig& model_cfg,
                                     const TrainConfig& train_cfg);

std::vector<std::size_t> manifest_labels(const DatasetManifest& manifest);

}  // namespace attnpool
