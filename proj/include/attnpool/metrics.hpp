// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace attnpool {

/// counts(i, j) = number of utterances of true class i predicted as class j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> class_names);
  /// Class names default to "0", "1", ...
  static ConfusionMatrix from_counts(
      std::initializer_list<std::initializer_list<std::uint64_t>> rows);
  static ConfusionMatrix from_pairs(std::vector<std::string> class_names,
                                    std::span<const std::size_t> truth,
                                    std::span<const std::size_t> predicted);

  /// Throws IndexError when either class is out of range.
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);

  std::size_t num_classes() const { return names_.size(); }
  const std::vector<std::string>& class_names() const { return names_; }
  std::uint64_t count(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * names_.size() + predicted];
  }
  std::uint64_t support(std::size_t truth) const;
  std::uint64_t predicted_count(std::size_t predicted) const;
  std::uint64_t total() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

/// Overall accuracy, trace / total. Throws DataError on an empty matrix.
double weighted_accuracy(const ConfusionMatrix& c);
/// Mean per-class recall over classes with non-zero support.
double unweighted_accuracy(const ConfusionMatrix& c);
/// Mean per-class F1 over classes with non-zero support; a class that is
/// never predicted contributes 0.
double macro_f1(const ConfusionMatrix& c);

struct ClassScores {
  std::uint64_t support = 0;
  double precision = 0.0;  // 0 when the class is never predicted
  double recall = 0.0;     // 0 when the class has no support
  double f1 = 0.0;
};

std::vector<ClassScores> per_class_scores(const ConfusionMatrix& c);

struct FoldReport {
  std::size_t fold = 0;
  ConfusionMatrix confusion;
  double wa = 0.0;
  double ua = 0.0;
  double f1 = 0.0;
  std::vector<ClassScores> per_class;
};

FoldReport make_fold_report(std::size_t fold, ConfusionMatrix confusion);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

/// Mean and sample (n - 1) standard deviation. Throws DataError when empty.
MetricSummary summarize(std::span<const double> values);

struct Aggregate {
  std::size_t folds = 0;
  MetricSummary wa, ua, f1;
};

Aggregate aggregate(std::span<const FoldReport> reports);

/// Renders rates as percentages with two decimals: "89.19 ± 2.65".
std::string format_mean_std(const MetricSummary& s);
std::string format_mean_std(double mean_percent, double std_percent);

}  // namespace attnpool
