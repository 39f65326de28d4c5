// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "attnpool/error.hpp"
#include "attnpool/report.hpp"

namespace attnpool {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<FoldReport> sample_folds() {
  std::vector<FoldReport> folds;
  folds.push_back(make_fold_report(0, ConfusionMatrix::from_counts({{3, 1}, {1, 1}})));
  folds.push_back(make_fold_report(1, ConfusionMatrix::from_counts({{2, 0}, {1, 2}})));
  return folds;
}

TEST(ReportTest, WritesAllFilesDeterministically) {
  const auto folds = sample_folds();
  const ReportInput input{"qkv", folds, aggregate(folds), {{"seed", "3"}},
                          PublishedScores{89.19, 2.65, 83.07, 4.99, std::nullopt, std::nullopt}};
  const fs::path root = fs::temp_directory_path() / "attnpool_report_test";
  fs::remove_all(root);
  emit_report(input, root / "a");
  emit_report(input, root / "b");
  for (const char* name : {"metrics.csv", "per_class.csv", "confusion_fold0.csv",
                           "confusion_fold1.csv", "confusion_total.csv", "summary.txt",
                           "config.txt"}) {
    ASSERT_TRUE(fs::exists(root / "a" / name)) << name;
    EXPECT_EQ(slurp(root / "a" / name), slurp(root / "b" / name)) << name;
  }
  const std::string metrics = slurp(root / "a" / "metrics.csv");
  EXPECT_EQ(metrics.find('\r'), std::string::npos);
  EXPECT_NE(metrics.find("0,6,0.666667,0.625000,0.625000\n"), std::string::npos) << metrics;
  EXPECT_EQ(slurp(root / "a" / "confusion_total.csv"), "true\\predicted,0,1\n0,5,1\n1,2,3\n");
  EXPECT_EQ(slurp(root / "a" / "config.txt"), "seed: 3\n");
  const std::string summary = slurp(root / "a" / "summary.txt");
  EXPECT_NE(summary.find("89.19 ± 2.65"), std::string::npos) << summary;
  fs::remove_all(root);
}

TEST(ReportTest, SingleFoldHasZeroSpread) {
  const auto folds = sample_folds();
  const std::span<const FoldReport> one(folds.data(), 1);
  const ReportInput input{"mean", one, aggregate(one), {}, std::nullopt};
  EXPECT_NE(summary_table(input).find("66.67 ± 0.00"), std::string::npos) << summary_table(input);
  EXPECT_NE(metrics_csv(one, input.aggregate).find("std,,0.000000,0.000000,0.000000"),
            std::string::npos);
}

TEST(ReportTest, MeanRowMatchesFolds) {
  const auto folds = sample_folds();
  const auto a = aggregate(folds);
  EXPECT_NEAR(a.wa.mean, (folds[0].wa + folds[1].wa) / 2.0, 1e-12);
  EXPECT_NEAR(a.f1.mean, (folds[0].f1 + folds[1].f1) / 2.0, 1e-12);
}

TEST(ReportTest, SweepTable) {
  const auto folds = sample_folds();
  const std::vector<SweepRow> rows = {{1, aggregate(folds), std::nullopt},
                                      {2, aggregate(folds), PublishedScores{1, 0, 2, 0, 3.0, 0.5}}};
  const fs::path dir = fs::temp_directory_path() / "attnpool_sweep_test";
  fs::remove_all(dir);
  emit_sweep_report(rows, {{"layers", "1..2"}}, dir);
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\n2,2,"), std::string::npos);
  EXPECT_NE(csv.find(",1.00,2.00,3.00\n"), std::string::npos) << csv;
  EXPECT_THROW(emit_sweep_report({}, {}, dir), DataError);
  fs::remove_all(dir);
}

TEST(ReportTest, UnwritableDestination) {
  const auto folds = sample_folds();
  const fs::path file = fs::temp_directory_path() / "attnpool_report_blocker";
  std::ofstream(file) << "x";
  EXPECT_THROW(emit_report({"qkv", folds, aggregate(folds), {}, std::nullopt}, file / "sub"),
               IoError);
  fs::remove(file);
}

}  // namespace
}  // namespace attnpool
