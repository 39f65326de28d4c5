// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "attnpool/error.hpp"
#include "attnpool/optim.hpp"
#include "oracles.hpp"

namespace attnpool {
namespace {

TEST(ScheduleTest, KeyPoints) {
  const ScheduleConfig cfg;
  const std::size_t total = 1000;
  EXPECT_EQ(warmup_steps(total, cfg), 100u);
  EXPECT_DOUBLE_EQ(cosine_lr(0, total, cfg), 0.0);
  EXPECT_NEAR(cosine_lr(50, total, cfg), 0.5e-4, 1e-18);
  EXPECT_NEAR(cosine_lr(100, total, cfg), 1e-4, 1e-12);
  EXPECT_NEAR(cosine_lr(550, total, cfg), 0.5e-4, 1e-12);
  EXPECT_NEAR(cosine_lr(total, total, cfg), 0.0, 1e-12);
}

TEST(ScheduleTest, ContinuousAtWarmupAndNonIncreasingAfter) {
  const ScheduleConfig cfg;
  for (std::size_t total : {7u, 20u, 33u, 600u, 1001u}) {
    const std::size_t w = warmup_steps(total, cfg);
    double previous = cosine_lr(w, total, cfg);
    if (w > 0) {
      EXPECT_LE(std::abs(previous - cosine_lr(w - 1, total, cfg)), cfg.peak_lr / w + 1e-15);
    }
    for (std::size_t s = w + 1; s <= total; ++s) {
      const double lr = cosine_lr(s, total, cfg);
      EXPECT_LE(lr, previous);
      previous = lr;
    }
  }
}

TEST(ScheduleTest, Errors) {
  const ScheduleConfig cfg;
  EXPECT_THROW(cosine_lr(0, 0, cfg), ConfigError);
  EXPECT_THROW(cosine_lr(11, 10, cfg), ConfigError);
  ScheduleConfig bad;
  bad.warmup_fraction = 1.0;
  EXPECT_THROW(cosine_lr(1, 10, bad), ConfigError);
}

TEST(AdamWTest, FirstStepMatchesHandComputation) {
  // m = 0.1 * 2, v = 0.001 * 4; bias-corrected m_hat = 2, v_hat = 4.
  const AdamWConfig cfg;
  Matrix w(1, 1, 0.0);
  const Shape s = w.shape();
  AdamW opt(cfg, std::span<const Shape>(&s, 1));
  Matrix* params[] = {&w};
  const Matrix grads[] = {Matrix(1, 1, 2.0)};
  const double lr = 1e-4;
  opt.step(params, grads, lr);
  EXPECT_NEAR(w(0, 0), -lr * 2.0 / (2.0 + 1e-8), 1e-20);
  EXPECT_NEAR(opt.first_moment(0)(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(opt.second_moment(0)(0, 0), 0.004, 1e-15);
}

TEST(AdamWTest, ZeroGradientOnlyDecays) {
  const AdamWConfig cfg;
  Matrix w = oracle::random_matrix(4, 3, 1);
  const Matrix before = w;
  const Shape s = w.shape();
  AdamW opt(cfg, std::span<const Shape>(&s, 1));
  Matrix* params[] = {&w};
  const Matrix grads[] = {Matrix(s)};
  opt.step(params, grads, 0.5);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(w.values()[i], before.values()[i] * (1.0 - 0.5 * cfg.weight_decay));
  }

  AdamWConfig no_decay;
  no_decay.weight_decay = 0.0;
  AdamW identity(no_decay, std::span<const Shape>(&s, 1));
  const Matrix held = w;
  identity.step(params, grads, 0.5);
  EXPECT_EQ(w, held);
}

TEST(AdamWTest, ZeroLearningRateStillUpdatesMoments) {
  Matrix w = oracle::random_matrix(2, 2, 2);
  const Matrix before = w;
  const Shape s = w.shape();
  AdamW opt(AdamWConfig{}, std::span<const Shape>(&s, 1));
  Matrix* params[] = {&w};
  const Matrix grads[] = {Matrix(2, 2, 1.0)};
  opt.step(params, grads, 0.0);
  EXPECT_EQ(w, before);
  EXPECT_EQ(opt.steps(), 1u);
  EXPECT_NEAR(opt.first_moment(0)(1, 1), 0.1, 1e-15);
}

TEST(AdamWTest, ShapeMismatch) {
  Matrix w(2, 2);
  const Shape s{2, 3};
  AdamW opt(AdamWConfig{}, std::span<const Shape>(&s, 1));
  Matrix* params[] = {&w};
  const Matrix grads[] = {Matrix(2, 2)};
  EXPECT_THROW(opt.step(params, grads, 0.1), ShapeError);
  EXPECT_THROW(opt.step({}, {}, 0.1), ShapeError);
}

}  // namespace
}  // namespace attnpool
