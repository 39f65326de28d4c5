// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "attnpool/features.hpp"
#include "attnpool/manifest.hpp"

namespace attnpool {

/// Planted-saliency dataset: every frame is N(0, sigma^2) noise except
/// `salient_frames` random positions per utterance, which also carry their
/// class's signature vector. Signature entries are N(0, signature_scale^2).
struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t per_class = 10;
  std::size_t frames = 50;
  std::size_t d_enc = 32;
  std::size_t salient_frames = 5;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
  std::size_t folds = 5;
  /// Number of encoder layers to emit (1..layers); each gets fresh noise and
  /// salient positions over the same labels and signatures.
  std::size_t layers = 1;
  double signature_scale = 1.0;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

struct SyntheticDataset {
  DatasetManifest manifest;
  Matrix signatures;  // classes x d_enc
  /// features[layer - 1][record]
  std::vector<std::vector<RepresentationMatrix>> features;
  /// salient[layer - 1][record] = sorted frame positions
  std::vector<std::vector<std::vector<std::size_t>>> salient;
};

/// Records are labelled in class blocks (record r has label r / per_class)
/// and assigned to folds round-robin (fold r % folds). A pure function of
/// `spec`.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes `<dir>/manifest.txt` and `<dir>/features/L<layer>/<id>.fea`.
void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

}  // namespace attnpool
