// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attnpool/metrics.hpp"
#include "attnpool/reference.hpp"

namespace attnpool {

/// Ordered key/value pairs describing an invocation.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

/// Writes `config.txt` as "key: value" lines in the given order.
void write_config_echo(const ConfigEcho& config, const std::filesystem::path& dir);

struct ReportInput {
  std::string label;  // row label in summary.txt, e.g. the pooling method
  std::span<const FoldReport> folds;
  Aggregate aggregate;
  ConfigEcho config;
  std::optional<PublishedScores> reference;
};

/// Writes metrics.csv, per_class.csv, confusion_fold<k>.csv,
/// confusion_total.csv, summary.txt and config.txt into `dir`. The output is
/// byte-identical for identical inputs. Throws IoError when a file cannot be
/// written and DataError when there are no folds.
void emit_report(const ReportInput& input, const std::filesystem::path& dir);

struct SweepRow {
  int layer = 0;
  Aggregate aggregate;
  std::optional<PublishedScores> reference;
};

/// Writes sweep.csv and sweep.txt: one row per encoder layer.
void emit_sweep_report(std::span<const SweepRow> rows, const ConfigEcho& config,
                       const std::filesystem::path& dir);

std::string confusion_csv(const ConfusionMatrix& c);
std::string metrics_csv(std::span<const FoldReport> folds, const Aggregate& aggregate);
std::string summary_table(const ReportInput& input);

}  // namespace attnpool
