// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "attnpool/gradcheck.hpp"

namespace attnpool {
namespace {

TEST(GradcheckTest, AllMethodsPass) {
  for (auto method : {PoolingMethod::kMean, PoolingMethod::kAttentive, PoolingMethod::kQkv}) {
    GradcheckOptions o;
    o.pooling = method;
    const auto report = run_gradcheck(o);
    EXPECT_TRUE(report.passed()) << to_string(method);
    for (const auto& t : report.tensors) EXPECT_LT(t.max_rel_error, 1e-4) << t.name;
  }
}

TEST(GradcheckTest, MeanPoolingChecksOnlyProjectorAndClassifier) {
  GradcheckOptions o;
  o.pooling = PoolingMethod::kMean;
  const auto report = run_gradcheck(o);
  ASSERT_EQ(report.tensors.size(), 2u);
  EXPECT_EQ(report.tensors[0].name, "projector");
  EXPECT_EQ(report.tensors[1].name, "classifier");
}

TEST(GradcheckTest, TrainingGraphWithDropoutPasses) {
  GradcheckOptions o;
  o.pooling = PoolingMethod::kAttentive;
  o.training = true;
  EXPECT_TRUE(run_gradcheck(o).passed());
}

TEST(GradcheckTest, SignFlipInAPullbackIsCaughtAndNamed) {
  GradcheckOptions o;
  o.pooling = PoolingMethod::kAttentive;
  testing::ScopedPullbackFault fault(OpKind::kTanh);
  const auto report = run_gradcheck(o);
  EXPECT_FALSE(report.passed());
  for (const auto& t : report.tensors) {
    const bool upstream_of_tanh =
        t.name.ends_with("score_weight") || t.name.ends_with("score_bias") || t.name == "projector";
    if (t.name.ends_with("score_weight") || t.name.ends_with("score_bias")) {
      EXPECT_FALSE(t.passed) << t.name;
    }
    if (!upstream_of_tanh) {
      EXPECT_TRUE(t.passed) << t.name;
    }
  }
}

TEST(GradcheckTest, EveryForwardOpFaultIsDetected) {
  const OpKind kinds[] = {OpKind::kMatmul,     OpKind::kTranspose,  OpKind::kAddRowBroadcast,
                          OpKind::kScale,      OpKind::kTanh,       OpKind::kMeanRows,
                          OpKind::kConcatCols, OpKind::kSliceCols,  OpKind::kRowSoftmax,
                          OpKind::kStandardizeRows, OpKind::kNegLogPick};
  for (OpKind kind : kinds) {
    bool caught = false;
    for (auto method : {PoolingMethod::kMean, PoolingMethod::kAttentive, PoolingMethod::kQkv}) {
      GradcheckOptions o;
      o.pooling = method;
      testing::ScopedPullbackFault fault(kind);
      caught = caught || !run_gradcheck(o).passed();
    }
    EXPECT_TRUE(caught) << op_name(kind);
  }
}

}  // namespace
}  // namespace attnpool
