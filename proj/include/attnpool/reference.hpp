// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attnpool {

/// Published fold-mean scores in percent, for side-by-side report columns.
struct PublishedScores {
  double wa = 0.0, wa_std = 0.0;
  double ua = 0.0, ua_std = 0.0;
  std::optional<double> f1, f1_std;  // only the per-layer tables report F1
};

struct ReferenceEntry {
  std::string dataset;     // "shemo" | "iemocap"
  std::string model_size;  // "tiny" | "small"
  std::string pooling;     // "mean" | "attentive" | "qkv"
  std::optional<int> layer;
  PublishedScores scores;
};

/// All embedded rows, in file order.
const std::vector<ReferenceEntry>& published_references();

/// Without a layer, returns the headline (best-layer) row; with a layer, the
/// per-layer row. Keys are case-insensitive. Throws LookupError when absent.
PublishedScores published_reference(std::string_view dataset, std::string_view model_size,
                                    std::string_view pooling,
                                    std::optional<int> layer = std::nullopt);

}  // namespace attnpool
