// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "attnpool/error.hpp"
#include "attnpool/seed.hpp"

namespace attnpool {

void SyntheticSpec::validate() const {
  if (classes < 2) throw ConfigError("synthetic: classes must be >= 2");
  if (per_class < 1) throw ConfigError("synthetic: per-class count must be >= 1");
  if (frames < 1) throw ConfigError("synthetic: frames must be >= 1");
  if (d_enc < 1) throw ConfigError("synthetic: d_enc must be >= 1");
  if (salient_frames < 1 || salient_frames > frames) {
    throw ConfigError("synthetic: salient frames must be in [1, " + std::to_string(frames) +
                      "], got " + std::to_string(salient_frames));
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("synthetic: sigma must be >= 0");
  if (folds < 1) throw ConfigError("synthetic: folds must be >= 1");
  if (classes * per_class < folds) {
    throw ConfigError("synthetic: fewer records than folds; some folds would be empty");
  }
  if (layers < 1) throw ConfigError("synthetic: layers must be >= 1");
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticDataset data;
  const std::size_t n = spec.classes * spec.per_class;

  Rng sig_rng(derive_seed(spec.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  data.signatures = Matrix(spec.classes, spec.d_enc);
  for (double& v : data.signatures.values()) v = spec.signature_scale * normal(sig_rng);

  auto& m = data.manifest;
  for (std::size_t c = 0; c < spec.classes; ++c) m.class_names.push_back("class" + std::to_string(c));
  m.fold_count = spec.folds;
  m.d_enc = spec.d_enc;
  for (std::size_t l = 1; l <= spec.layers; ++l) m.layers.push_back(static_cast<int>(l));
  m.dataset = "synthetic";
  char id[32];
  for (std::size_t r = 0; r < n; ++r) {
    std::snprintf(id, sizeof id, "utt%05zu", r);
    UtteranceRecord rec;
    rec.id = id;
    rec.label = r / spec.per_class;
    rec.fold = r % spec.folds;
    rec.group = static_cast<int>(rec.fold);
    rec.feature_template = std::string("features/L{layer}/") + id + ".fea";
    m.records.push_back(std::move(rec));
  }

  data.features.resize(spec.layers);
  data.salient.resize(spec.layers);
  std::vector<std::size_t> positions(spec.frames);
  for (std::size_t l = 0; l < spec.layers; ++l) {
    data.features[l].reserve(n);
    data.salient[l].reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
      // One stream per (layer, record) so records do not depend on each other.
      Rng rng(derive_seed(spec.seed, 1 + l * n + r));
      std::normal_distribution<double> noise(0.0, 1.0);
      Matrix frames(spec.frames, spec.d_enc);
      for (double& v : frames.values()) v = spec.noise_sigma * noise(rng);

      std::iota(positions.begin(), positions.end(), std::size_t{0});
      for (std::size_t i = 0; i < spec.salient_frames; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, spec.frames - 1);
        std::swap(positions[i], positions[pick(rng)]);
      }
      std::vector<std::size_t> chosen(positions.begin(), positions.begin() + spec.salient_frames);
      std::sort(chosen.begin(), chosen.end());

      const std::size_t label = m.records[r].label;
      for (std::size_t t : chosen) {
        auto row = frames.row(t);
        for (std::size_t d = 0; d < spec.d_enc; ++d) row[d] += data.signatures(label, d);
      }
      data.features[l].push_back(RepresentationMatrix::from_matrix(
          frames, SourceTag{"", static_cast<int>(l + 1), m.records[r].id}));
      data.salient[l].push_back(std::move(chosen));
    }
  }
  return data;
}

void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  DatasetManifest located = data.manifest;
  located.base_dir = dir;
  for (std::size_t l = 0; l < data.features.size(); ++l) {
    const int layer = located.layers.at(l);
    fs::create_directories(dir / "features" / ("L" + std::to_string(layer)));
    for (std::size_t r = 0; r < located.records.size(); ++r) {
      write_features(data.features[l][r], located.feature_path(located.records[r], layer));
    }
  }
  save_manifest(data.manifest, dir / "manifest.txt");
}

}  // namespace attnpool
