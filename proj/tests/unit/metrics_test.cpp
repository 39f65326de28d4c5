// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "attnpool/error.hpp"
#include "attnpool/metrics.hpp"
#include "attnpool/seed.hpp"

namespace attnpool {
namespace {

TEST(MetricsTest, TwoClassExample) {
  const auto c = ConfusionMatrix::from_counts({{3, 1}, {1, 1}});
  EXPECT_NEAR(weighted_accuracy(c), 4.0 / 6.0, 1e-15);
  EXPECT_NEAR(unweighted_accuracy(c), 0.625, 1e-15);
  EXPECT_NEAR(macro_f1(c), 0.625, 1e-15);
  const auto s = per_class_scores(c);
  EXPECT_NEAR(s[0].precision, 0.75, 1e-15);
  EXPECT_NEAR(s[1].recall, 0.5, 1e-15);
  EXPECT_EQ(s[0].support, 4u);
}

TEST(MetricsTest, DiagonalIsPerfect) {
  const auto c = ConfusionMatrix::from_counts({{4, 0, 0}, {0, 1, 0}, {0, 0, 7}});
  EXPECT_EQ(weighted_accuracy(c), 1.0);
  EXPECT_EQ(unweighted_accuracy(c), 1.0);
  EXPECT_EQ(macro_f1(c), 1.0);
}

TEST(MetricsTest, ZeroSupportClassesAreSkipped) {
  // Class 2 never occurs and is never predicted; class 1 is never predicted.
  const auto c = ConfusionMatrix::from_counts({{2, 0, 0}, {2, 0, 0}, {0, 0, 0}});
  EXPECT_NEAR(unweighted_accuracy(c), 0.5, 1e-15);
  EXPECT_NEAR(macro_f1(c), (2.0 * 0.5 * 1.0 / 1.5 + 0.0) / 2.0, 1e-15);
}

TEST(MetricsTest, EmptyMatrixIsADataError) {
  ConfusionMatrix c({"a", "b"});
  EXPECT_THROW(weighted_accuracy(c), DataError);
  EXPECT_THROW(unweighted_accuracy(c), DataError);
  EXPECT_THROW(macro_f1(c), DataError);
  EXPECT_THROW(c.add(2, 0), IndexError);
}

ConfusionMatrix random_confusion(Rng& rng, std::size_t k) {
  std::vector<std::string> names(k);
  ConfusionMatrix c(names);
  std::uniform_int_distribution<std::uint64_t> count(0, 9);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) c.add(i, j, count(rng));
  c.add(0, 0);
  return c;
}

TEST(MetricsTest, RandomMatricesStayInRangeAndRespectSymmetries) {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + i % 5;
    const auto c = random_confusion(rng, k);
    for (double v : {weighted_accuracy(c), unweighted_accuracy(c), macro_f1(c)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ConfusionMatrix p(c.class_names());
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) p.add(perm[a], perm[b], c.count(a, b));
    EXPECT_NEAR(unweighted_accuracy(p), unweighted_accuracy(c), 1e-12);
    EXPECT_NEAR(macro_f1(p), macro_f1(c), 1e-12);
    EXPECT_EQ(weighted_accuracy(p), weighted_accuracy(c));
  }
}

TEST(MetricsTest, EqualSupportMakesWaEqualUa) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = 2 + i % 4;
    ConfusionMatrix c{std::vector<std::string>(k)};
    for (std::size_t row = 0; row < k; ++row) {
      for (int n = 0; n < 12; ++n) {
        c.add(row, std::uniform_int_distribution<std::size_t>(0, k - 1)(rng));
      }
    }
    EXPECT_NEAR(weighted_accuracy(c), unweighted_accuracy(c), 1e-15);
  }
}

TEST(MetricsTest, PairsAndCountsAgree) {
  Rng rng(8);
  std::vector<std::size_t> truth, predicted;
  for (int i = 0; i < 300; ++i) {
    truth.push_back(std::uniform_int_distribution<std::size_t>(0, 3)(rng));
    predicted.push_back(std::uniform_int_distribution<std::size_t>(0, 3)(rng));
  }
  const auto c = ConfusionMatrix::from_pairs({"a", "b", "c", "d"}, truth, predicted);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i];
  EXPECT_DOUBLE_EQ(weighted_accuracy(c), hits / 300.0);
  double recall_sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    std::size_t tp = 0, support = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      support += truth[i] == k;
      tp += truth[i] == k && predicted[i] == k;
    }
    recall_sum += static_cast<double>(tp) / support;
  }
  EXPECT_NEAR(unweighted_accuracy(c), recall_sum / 4.0, 1e-15);
}

TEST(MetricsTest, AggregationAndFormatting) {
  const double values[] = {0.9, 0.8, 0.85};
  const auto s = summarize(values);
  EXPECT_NEAR(s.mean, 0.85, 1e-15);
  EXPECT_NEAR(s.std, 0.05, 1e-15);
  const double single[] = {0.5};
  EXPECT_EQ(summarize(single).std, 0.0);
  EXPECT_EQ(format_mean_std(89.19, 2.65), "89.19 ± 2.65");
  EXPECT_EQ(format_mean_std(MetricSummary{0.5, 0.0}), "50.00 ± 0.00");

  std::vector<FoldReport> folds;
  folds.push_back(make_fold_report(0, ConfusionMatrix::from_counts({{3, 1}, {1, 1}})));
  folds.push_back(make_fold_report(1, ConfusionMatrix::from_counts({{2, 0}, {0, 2}})));
  const auto a = aggregate(folds);
  EXPECT_EQ(a.folds, 2u);
  EXPECT_NEAR(a.ua.mean, (0.625 + 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(a.wa.mean, (folds[0].wa + folds[1].wa) / 2.0, 1e-12);
  EXPECT_THROW(aggregate(std::span<const FoldReport>{}), DataError);
}

}  // namespace
}  // namespace attnpool
