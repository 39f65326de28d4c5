// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <mutex>
#include <set>

#include "attnpool/error.hpp"
#include "attnpool/synthetic.hpp"
#include "attnpool/training.hpp"
#include "oracles.hpp"

namespace attnpool {
namespace {

SyntheticDataset small_dataset(double sigma = 1.0, std::size_t folds = 5) {
  SyntheticSpec spec;
  spec.per_class = 5;
  spec.frames = 12;
  spec.d_enc = 16;
  spec.salient_frames = 3;
  spec.noise_sigma = sigma;
  spec.folds = folds;
  spec.seed = 4;
  return generate_synthetic(spec);
}

ModelConfig small_model(PoolingMethod pooling = PoolingMethod::kAttentive) {
  ModelConfig cfg;
  cfg.d_enc = 16;
  cfg.d_model = 16;
  cfg.num_heads = 2;
  cfg.d_hidden = 4;
  cfg.pooling = pooling;
  return cfg;
}

TrainConfig short_training(std::size_t epochs = 3) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 4;
  cfg.seed = 9;
  return cfg;
}

TEST(CrossEntropyTest, KnownValues) {
  const std::vector<double> uniform(4, 0.25);
  EXPECT_NEAR(cross_entropy(uniform, 2), std::log(4.0), 1e-15);
  const std::vector<double> sure = {0.0, 1.0, 0.0};
  EXPECT_EQ(cross_entropy(sure, 1), 0.0);
  EXPECT_NEAR(cross_entropy(sure, 0), -std::log(1e-12), 1e-9);
  EXPECT_THROW(cross_entropy(uniform, 4), IndexError);
}

TEST(CrossEntropyTest, SoftmaxLogitGradientIsProbabilityMinusOneHot) {
  const Matrix logits = oracle::random_matrix(1, 5, 3, 2.0);
  const std::size_t label = 3;
  Tape tape;
  Var z = tape.parameter(logits);
  Var p = row_softmax(z);
  tape.backward(cross_entropy(p, label));
  const Matrix g = tape.grad(z);
  for (std::size_t j = 0; j < 5; ++j) {
    const double expected = p.value()[j] - (j == label ? 1.0 : 0.0);
    EXPECT_NEAR(g[j], expected, 1e-12);
  }
}

TEST(TrainingTest, SameSeedSameModel) {
  const auto data = small_dataset();
  const InMemoryFeatures features(data.features[0]);
  const auto a = train_fold(data.manifest, features, 1, small_model(), short_training());
  const auto b = train_fold(data.manifest, features, 1, small_model(), short_training());
  const auto pa = a.model.parameters();
  const auto pb = b.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i].value, *pb[i].value) << pa[i].name;
  ASSERT_EQ(a.history.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(a.history[e].mean_loss, b.history[e].mean_loss);
}

TEST(TrainingTest, HeldOutFoldIsNeverTrainedOn) {
  const auto data = small_dataset(1.0, 10);
  const InMemoryFeatures features(data.features[0]);
  for (std::size_t fold : {0u, 7u}) {
    std::set<std::size_t> seen;
    std::size_t steps = 0;
    TrainConfig cfg = short_training(2);
    cfg.observer = [&](std::size_t, std::span<const std::size_t> batch) {
      ++steps;
      seen.insert(batch.begin(), batch.end());
    };
    train_fold(data.manifest, features, fold, small_model(), cfg);
    const FoldSplit split = split_fold(data.manifest, fold);
    EXPECT_EQ(seen.size(), split.train.size());
    EXPECT_EQ(split.train.size(), 18u);
    for (std::size_t r : split.test) EXPECT_FALSE(seen.contains(r)) << r;
    EXPECT_EQ(steps, 2u * 5u);
  }
}

TEST(TrainingTest, LossFallsOnCleanData) {
  const auto data = small_dataset(0.0);
  const InMemoryFeatures features(data.features[0]);
  TrainConfig cfg = short_training(30);
  cfg.schedule.peak_lr = 3e-3;
  const auto result = train_fold(data.manifest, features, 0, small_model(PoolingMethod::kQkv), cfg);
  for (std::size_t e = 3; e < result.history.size(); ++e) {
    EXPECT_LT(result.history[e].mean_loss, result.history[e - 1].mean_loss) << "epoch " << e + 1;
  }
  EXPECT_EQ(result.train_accuracy, 1.0);
  EXPECT_EQ(result.history.back().final_lr, cosine_lr(30 * 4 - 1, 30 * 4, cfg.schedule));
}

TEST(TrainingTest, InputErrors) {
  const auto data = small_dataset();
  const InMemoryFeatures features(data.features[0]);
  const std::vector<std::size_t> labels = manifest_labels(data.manifest);
  const std::vector<std::size_t> none;
  EXPECT_THROW(train_model(features, labels, none, small_model(), short_training(), 0), DataError);
  const std::vector<std::size_t> outside = {99};
  EXPECT_THROW(train_model(features, labels, outside, small_model(), short_training(), 0),
               IndexError);
  ModelConfig three = small_model();
  three.num_classes = 3;
  EXPECT_THROW(train_fold(data.manifest, features, 0, three, short_training()), ConfigError);
  TrainConfig zero = short_training();
  zero.epochs = 0;
  EXPECT_THROW(train_fold(data.manifest, features, 0, small_model(), zero), ConfigError);

  DatasetManifest single = data.manifest;
  single.fold_count = 1;
  for (auto& r : single.records) r.fold = 0;
  EXPECT_THROW(train_fold(single, features, 0, small_model(), short_training()), DataError);
  EXPECT_THROW(cross_validate(single, features, small_model(), short_training()), ConfigError);
}

TEST(CrossValidationTest, ReportsEveryFoldAndAggregates) {
  const auto data = small_dataset();
  const InMemoryFeatures features(data.features[0]);
  const auto serial = cross_validate(data.manifest, features, small_model(), short_training());
  ASSERT_EQ(serial.folds.size(), 5u);
  std::vector<double> wa, ua, f1;
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(serial.folds[k].fold, k);
    EXPECT_EQ(serial.folds[k].confusion.total(), split_fold(data.manifest, k).test.size());
    wa.push_back(serial.folds[k].wa);
    ua.push_back(serial.folds[k].ua);
    f1.push_back(serial.folds[k].f1);
  }
  EXPECT_NEAR(serial.aggregate.wa.mean, summarize(wa).mean, 1e-12);
  EXPECT_NEAR(serial.aggregate.ua.std, summarize(ua).std, 1e-12);
  EXPECT_NEAR(serial.aggregate.f1.mean, summarize(f1).mean, 1e-12);

  TrainConfig parallel_cfg = short_training();
  parallel_cfg.jobs = 3;
  const auto parallel = cross_validate(data.manifest, features, small_model(), parallel_cfg);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(parallel.folds[k].confusion, serial.folds[k].confusion);
    EXPECT_EQ(parallel.histories[k].back().mean_loss, serial.histories[k].back().mean_loss);
  }
}

TEST(CrossValidationTest, ParallelFailureIsReported) {
  const auto data = small_dataset();
  const InMemoryFeatures features(data.features[0]);
  DatasetManifest broken = data.manifest;
  for (auto& r : broken.records) {
    if (r.fold == 3) r.fold = 2;
  }
  TrainConfig cfg = short_training(1);
  cfg.jobs = 4;
  EXPECT_THROW(cross_validate(broken, features, small_model(), cfg), DataError);
}

}  // namespace
}  // namespace attnpool
