// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "attnpool/checkpoint.hpp"
#include "attnpool/error.hpp"
#include "attnpool/features.hpp"
#include "oracles.hpp"

namespace attnpool {
namespace {

namespace fs = std::filesystem;

TEST(CheckpointTest, RoundTripAtSinglePrecision) {
  const fs::path dir = fs::temp_directory_path() / "attnpool_checkpoint_test";
  fs::remove_all(dir);
  for (auto method : {PoolingMethod::kMean, PoolingMethod::kAttentive, PoolingMethod::kQkv}) {
    ModelConfig c;
    c.pooling = method;
    c.d_enc = 6;
    c.d_model = 5;
    c.num_heads = 2;
    c.d_hidden = 3;
    c.num_classes = 3;
    c.encoder_layer = 4;
    const auto model = oracle::random_model(c, 12);
    save_checkpoint(model, dir);
    const auto back = load_checkpoint(dir);
    EXPECT_EQ(back.config().pooling, method);
    EXPECT_EQ(back.config().encoder_layer, 4);
    auto original = model.parameters();
    auto loaded = back.parameters();
    ASSERT_EQ(original.size(), loaded.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
      EXPECT_EQ(loaded[i].name, original[i].name);
      const auto rounded = RepresentationMatrix::from_matrix(*original[i].value).to_matrix();
      EXPECT_EQ(*loaded[i].value, rounded) << original[i].name;
    }
    fs::remove_all(dir);
  }
}

TEST(CheckpointTest, CorruptCheckpointsAreRejected) {
  const fs::path dir = fs::temp_directory_path() / "attnpool_checkpoint_bad";
  fs::remove_all(dir);
  ModelConfig c;
  c.d_enc = 4;
  c.d_model = 3;
  c.pooling = PoolingMethod::kMean;
  save_checkpoint(HeadModel::initialize(c, 1), dir);
  RepresentationMatrix wrong;
  wrong.frames = 2;
  wrong.width = 2;
  wrong.values.assign(4, 0.0f);
  write_features(wrong, dir / "classifier.fea");
  EXPECT_THROW(load_checkpoint(dir), ShapeError);
  {
    std::ofstream out(dir / "model.txt");
    out << "format: something-else\n";
  }
  EXPECT_THROW(load_checkpoint(dir), FormatError);
  fs::remove_all(dir);
  EXPECT_THROW(load_checkpoint(dir), IoError);
}

}  // namespace
}  // namespace attnpool
