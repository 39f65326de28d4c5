// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "attnpool/features.hpp"
#include "attnpool/manifest.hpp"

namespace attnpool {

/// Supplies the encoder representation of each manifest record for one
/// encoder layer. Implementations are safe for concurrent `get` calls.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t size() const = 0;
  virtual Matrix get(std::size_t record) const = 0;
};

class InMemoryFeatures final : public FeatureSource {
 public:
  explicit InMemoryFeatures(std::vector<RepresentationMatrix> items) : items_(std::move(items)) {}

  std::size_t size() const override { return items_.size(); }
  Matrix get(std::size_t record) const override;

 private:
  std::vector<RepresentationMatrix> items_;
};

/// Reads FEA1 files referenced by a manifest for a single layer. Everything is
/// loaded up front when it fits in `cache_limit_bytes`; otherwise each `get`
/// reads from disk.
class ManifestFeatures final : public FeatureSource {
 public:
  static constexpr std::size_t kDefaultCacheLimit = std::size_t{2} << 30;

  /// Throws DataError when the manifest does not list `layer` or a file is
  /// missing, ShapeError when a file's width differs from the manifest d_enc.
  ManifestFeatures(const DatasetManifest& manifest, int layer,
                   std::size_t cache_limit_bytes = kDefaultCacheLimit);

  std::size_t size() const override { return paths_.size(); }
  Matrix get(std::size_t record) const override;

 private:
  RepresentationMatrix load(std::size_t record) const;

  std::vector<std::filesystem::path> paths_;
  std::size_t d_enc_ = 0;
  int layer_ = 0;
  std::vector<RepresentationMatrix> cache_;
};

}  // namespace attnpool
