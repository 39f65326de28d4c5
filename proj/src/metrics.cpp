// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "attnpool/error.hpp"

namespace attnpool {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {}

ConfusionMatrix ConfusionMatrix::from_counts(
    std::initializer_list<std::initializer_list<std::uint64_t>> rows) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < rows.size(); ++i) names.push_back(std::to_string(i));
  ConfusionMatrix c(std::move(names));
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != rows.size()) throw ShapeError("confusion matrix must be square");
    std::size_t j = 0;
    for (std::uint64_t v : row) c.add(i, j++, v);
    ++i;
  }
  return c;
}

ConfusionMatrix ConfusionMatrix::from_pairs(std::vector<std::string> class_names,
                                            std::span<const std::size_t> truth,
                                            std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix c(std::move(class_names));
  for (std::size_t i = 0; i < truth.size(); ++i) c.add(truth[i], predicted[i]);
  return c;
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  const std::size_t n = names_.size();
  if (truth >= n || predicted >= n) {
    throw IndexError("confusion: class pair (" + std::to_string(truth) + ", " +
                     std::to_string(predicted) + ") outside " + std::to_string(n) + " classes");
  }
  counts_[truth * n + predicted] += count;
}

std::uint64_t ConfusionMatrix::support(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < names_.size(); ++j) s += count(truth, j);
  return s;
}

std::uint64_t ConfusionMatrix::predicted_count(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < names_.size(); ++i) s += count(i, predicted);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.names_.size() != names_.size()) {
    throw ShapeError("confusion: cannot add " + std::to_string(other.names_.size()) +
                     "-class matrix to " + std::to_string(names_.size()) + "-class matrix");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

double weighted_accuracy(const ConfusionMatrix& c) {
  const std::uint64_t total = c.total();
  if (total == 0) throw DataError("weighted accuracy: empty confusion matrix");
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < c.num_classes(); ++i) hits += c.count(i, i);
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<ClassScores> per_class_scores(const ConfusionMatrix& c) {
  std::vector<ClassScores> out(c.num_classes());
  for (std::size_t k = 0; k < c.num_classes(); ++k) {
    auto& s = out[k];
    const double tp = static_cast<double>(c.count(k, k));
    s.support = c.support(k);
    const std::uint64_t predicted = c.predicted_count(k);
    s.recall = s.support == 0 ? 0.0 : tp / static_cast<double>(s.support);
    s.precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    const double denom = s.precision + s.recall;
    s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  }
  return out;
}

namespace {

template <typename Field>
double mean_over_supported(const ConfusionMatrix& c, Field field, const char* what) {
  double total = 0.0;
  std::size_t classes = 0;
  for (const auto& s : per_class_scores(c)) {
    if (s.support == 0) continue;
    total += field(s);
    ++classes;
  }
  if (classes == 0) throw DataError(std::string(what) + ": no class has support");
  return total / static_cast<double>(classes);
}

}  // namespace

double unweighted_accuracy(const ConfusionMatrix& c) {
  return mean_over_supported(c, [](const ClassScores& s) { return s.recall; },
                             "unweighted accuracy");
}

double macro_f1(const ConfusionMatrix& c) {
  return mean_over_supported(c, [](const ClassScores& s) { return s.f1; }, "macro F1");
}

FoldReport make_fold_report(std::size_t fold, ConfusionMatrix confusion) {
  FoldReport r{fold, std::move(confusion), 0.0, 0.0, 0.0, {}};
  r.wa = weighted_accuracy(r.confusion);
  r.ua = unweighted_accuracy(r.confusion);
  r.f1 = macro_f1(r.confusion);
  r.per_class = per_class_scores(r.confusion);
  return r;
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) throw DataError("summarize: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

Aggregate aggregate(std::span<const FoldReport> reports) {
  if (reports.empty()) throw DataError("aggregate: no fold reports");
  std::vector<double> wa, ua, f1;
  for (const auto& r : reports) {
    wa.push_back(r.wa);
    ua.push_back(r.ua);
    f1.push_back(r.f1);
  }
  return {reports.size(), summarize(wa), summarize(ua), summarize(f1)};
}

std::string format_mean_std(double mean_percent, double std_percent) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean_percent, std_percent);
  return buf;
}

std::string format_mean_std(const MetricSummary& s) {
  return format_mean_std(100.0 * s.mean, 100.0 * s.std);
}

}  // namespace attnpool
