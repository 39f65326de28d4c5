// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/feature_source.hpp"

#include <filesystem>

#include "attnpool/error.hpp"

namespace attnpool {

Matrix InMemoryFeatures::get(std::size_t record) const {
  if (record >= items_.size()) {
    throw IndexError("features: record " + std::to_string(record) + " out of range");
  }
  return items_[record].to_matrix();
}

ManifestFeatures::ManifestFeatures(const DatasetManifest& manifest, int layer,
                                   std::size_t cache_limit_bytes)
    : d_enc_(manifest.d_enc), layer_(layer) {
  if (!manifest.has_layer(layer)) {
    throw DataError("no features stored for layer " + std::to_string(layer));
  }
  paths_.reserve(manifest.records.size());
  std::uintmax_t total = 0;
  for (const auto& r : manifest.records) {
    auto p = manifest.feature_path(r, layer);
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(p, ec);
    if (ec) {
      throw DataError("layer " + std::to_string(layer) + ": missing features for '" + r.id +
                      "' at " + p.string());
    }
    total += bytes;
    paths_.push_back(std::move(p));
  }
  if (total <= cache_limit_bytes) {
    cache_.reserve(paths_.size());
    for (std::size_t i = 0; i < paths_.size(); ++i) cache_.push_back(load(i));
  }
}

RepresentationMatrix ManifestFeatures::load(std::size_t record) const {
  auto m = read_features(paths_[record]);
  if (d_enc_ != 0 && m.width != d_enc_) {
    throw ShapeError(paths_[record].string() + ": width " + std::to_string(m.width) +
                     " but manifest d_enc is " + std::to_string(d_enc_));
  }
  m.tag.layer = layer_;
  return m;
}

Matrix ManifestFeatures::get(std::size_t record) const {
  if (record >= paths_.size()) {
    throw IndexError("features: record " + std::to_string(record) + " out of range");
  }
  if (!cache_.empty()) return cache_[record].to_matrix();
  return load(record).to_matrix();
}

}  // namespace attnpool
