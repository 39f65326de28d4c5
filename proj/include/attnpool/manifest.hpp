// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace attnpool {

struct UtteranceRecord {
  std::string id;
  std::size_t label = 0;
  int group = 0;  // speaker group or recording session
  std::size_t fold = 0;
  /// Feature path; "{layer}" is replaced by the encoder layer index.
  /// Relative paths are resolved against the manifest's directory.
  std::string feature_template;
};

struct DatasetManifest {
  std::vector<std::string> class_names;
  std::size_t fold_count = 0;
  std::size_t d_enc = 0;
  std::vector<int> layers;
  std::string dataset;     // optional, e.g. "shemo" or "iemocap"
  std::string model_size;  // optional, "tiny" or "small"
  std::vector<UtteranceRecord> records;
  std::filesystem::path base_dir;

  std::size_t num_classes() const { return class_names.size(); }
  bool has_layer(int layer) const;
  std::filesystem::path feature_path(const UtteranceRecord& record, int layer) const;
};

struct ManifestValidation {
  /// Also require every record's feature file to exist for every layer.
  bool check_files = false;
};

/// Checks every manifest invariant; throws ManifestError with the matching kind.
void validate_manifest(const DatasetManifest& manifest, ManifestValidation options = {});

// Text format, one record per line after a header block:
//
//   # comment
//   format: attnpool-manifest 1
//   classes: anger happiness sadness neutral
//   folds: 5
//   d_enc: 768
//   layers: 1 2 3 4
//   dataset: iemocap        (optional)
//   model_size: small       (optional)
//   records:
//   <id> <label-index> <group> <fold> <feature-path-template>
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {},
                               ManifestValidation options = {});
DatasetManifest load_manifest(const std::filesystem::path& path, ManifestValidation options = {});

std::string format_manifest(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct FoldSplit {
  std::vector<std::size_t> train;  // record indices
  std::vector<std::size_t> test;
};

/// Records with fold == `fold` form the test split, everything else trains.
FoldSplit split_fold(const DatasetManifest& manifest, std::size_t fold);

}  // namespace attnpool
