// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "attnpool/error.hpp"
#include "attnpool/reference.hpp"

namespace attnpool {
namespace {

TEST(ReferenceTest, HeadlineTable) {
  const auto qkv = published_reference("shemo", "small", "qkv");
  EXPECT_DOUBLE_EQ(qkv.wa, 89.19);
  EXPECT_DOUBLE_EQ(qkv.ua, 83.07);
  EXPECT_DOUBLE_EQ(qkv.wa_std, 2.65);
  EXPECT_FALSE(qkv.f1.has_value());
  const auto mean = published_reference("IEMOCAP", "Tiny", "mean");
  EXPECT_DOUBLE_EQ(mean.wa, 68.22);
  EXPECT_DOUBLE_EQ(mean.ua, 68.53);
}

TEST(ReferenceTest, PerLayerTables) {
  const auto s = published_reference("shemo", "small", "attentive", 8);
  EXPECT_DOUBLE_EQ(s.wa, 88.94);
  EXPECT_DOUBLE_EQ(s.ua, 82.86);
  ASSERT_TRUE(s.f1.has_value());
  EXPECT_DOUBLE_EQ(*s.f1, 88.79);
}

TEST(ReferenceTest, TableShape) {
  std::size_t headline = 0, tiny_layers = 0, small_layers = 0;
  for (const auto& e : published_references()) {
    if (!e.layer) {
      ++headline;
    } else if (e.model_size == "tiny") {
      ++tiny_layers;
    } else {
      ++small_layers;
    }
  }
  EXPECT_EQ(headline, 12u);            // 2 datasets x 2 sizes x 3 methods
  EXPECT_EQ(tiny_layers, 2u * 3 * 4);  // 4 layers
  EXPECT_EQ(small_layers, 2u * 3 * 12);
}

TEST(ReferenceTest, UnknownKeys) {
  EXPECT_THROW(published_reference("ravdess", "small", "qkv"), LookupError);
  EXPECT_THROW(published_reference("shemo", "small", "qkv", 13), LookupError);
}

}  // namespace
}  // namespace attnpool
