// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "attnpool/error.hpp"

namespace attnpool {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string pad(const std::string& s, std::size_t width) {
  // Width counts code points so "±" lines up.
  std::size_t points = 0;
  for (unsigned char ch : s) points += (ch & 0xC0) != 0x80;
  return points >= width ? s + " " : s + std::string(width - points, ' ');
}

}  // namespace

void write_config_echo(const ConfigEcho& config, const std::filesystem::path& dir) {
  make_dir(dir);
  std::string text;
  for (const auto& [key, value] : config) text += key + ": " + value + "\n";
  write_text(dir / "config.txt", text);
}

std::string confusion_csv(const ConfusionMatrix& c) {
  std::string out = "true\\predicted";
  for (const auto& name : c.class_names()) out += "," + name;
  out += "\n";
  for (std::size_t i = 0; i < c.num_classes(); ++i) {
    out += c.class_names()[i];
    for (std::size_t j = 0; j < c.num_classes(); ++j) out += "," + std::to_string(c.count(i, j));
    out += "\n";
  }
  return out;
}

std::string metrics_csv(std::span<const FoldReport> folds, const Aggregate& aggregate) {
  std::string out = "fold,n,wa,ua,f1\n";
  for (const auto& r : folds) {
    out += std::to_string(r.fold) + "," + std::to_string(r.confusion.total()) + "," +
           fixed(r.wa) + "," + fixed(r.ua) + "," + fixed(r.f1) + "\n";
  }
  out += "mean,," + fixed(aggregate.wa.mean) + "," + fixed(aggregate.ua.mean) + "," +
         fixed(aggregate.f1.mean) + "\n";
  out += "std,," + fixed(aggregate.wa.std) + "," + fixed(aggregate.ua.std) + "," +
         fixed(aggregate.f1.std) + "\n";
  return out;
}

std::string summary_table(const ReportInput& input) {
  const std::size_t w = 18;
  std::ostringstream out;
  out << pad("", 12) << pad("WA", w) << pad("UA", w) << "F1\n";
  out << pad(input.label, 12) << pad(format_mean_std(input.aggregate.wa), w)
      << pad(format_mean_std(input.aggregate.ua), w) << format_mean_std(input.aggregate.f1)
      << "\n";
  if (input.reference) {
    const auto& p = *input.reference;
    out << pad("published", 12) << pad(format_mean_std(p.wa, p.wa_std), w)
        << pad(format_mean_std(p.ua, p.ua_std), w)
        << (p.f1 ? format_mean_std(*p.f1, p.f1_std.value_or(0.0)) : std::string("-")) << "\n";
  }
  out << "\nfolds: " << input.aggregate.folds << "\n";
  return out.str();
}

void emit_report(const ReportInput& input, const std::filesystem::path& dir) {
  if (input.folds.empty()) throw DataError("emit_report: no fold reports");
  make_dir(dir);
  write_text(dir / "metrics.csv", metrics_csv(input.folds, input.aggregate));

  std::string per_class = "fold,class,support,precision,recall,f1\n";
  ConfusionMatrix total(input.folds.front().confusion.class_names());
  for (const auto& r : input.folds) {
    total += r.confusion;
    for (std::size_t k = 0; k < r.per_class.size(); ++k) {
      const auto& s = r.per_class[k];
      per_class += std::to_string(r.fold) + "," + r.confusion.class_names()[k] + "," +
                   std::to_string(s.support) + "," + fixed(s.precision) + "," + fixed(s.recall) +
                   "," + fixed(s.f1) + "\n";
    }
    write_text(dir / ("confusion_fold" + std::to_string(r.fold) + ".csv"),
               confusion_csv(r.confusion));
  }
  const auto pooled = per_class_scores(total);
  for (std::size_t k = 0; k < pooled.size(); ++k) {
    const auto& s = pooled[k];
    per_class += "total," + total.class_names()[k] + "," + std::to_string(s.support) + "," +
                 fixed(s.precision) + "," + fixed(s.recall) + "," + fixed(s.f1) + "\n";
  }
  write_text(dir / "per_class.csv", per_class);
  write_text(dir / "confusion_total.csv", confusion_csv(total));
  write_text(dir / "summary.txt", summary_table(input));
  write_config_echo(input.config, dir);
}

void emit_sweep_report(std::span<const SweepRow> rows, const ConfigEcho& config,
                       const std::filesystem::path& dir) {
  if (rows.empty()) throw DataError("emit_sweep_report: no layers");
  make_dir(dir);
  std::string csv =
      "layer,folds,wa,wa_std,ua,ua_std,f1,f1_std,published_wa,published_ua,published_f1\n";
  const std::size_t w = 18;
  std::ostringstream table;
  table << pad("Layer", 8) << pad("WA", w) << pad("UA", w) << pad("F1", w) << "published WA/UA/F1\n";
  for (const auto& row : rows) {
    const auto& a = row.aggregate;
    csv += std::to_string(row.layer) + "," + std::to_string(a.folds) + "," + fixed(a.wa.mean) +
           "," + fixed(a.wa.std) + "," + fixed(a.ua.mean) + "," + fixed(a.ua.std) + "," +
           fixed(a.f1.mean) + "," + fixed(a.f1.std) + ",";
    std::string published = "-";
    if (row.reference) {
      const auto& p = *row.reference;
      csv += fixed(p.wa, 2) + "," + fixed(p.ua, 2) + "," + (p.f1 ? fixed(*p.f1, 2) : "");
      published = fixed(p.wa, 2) + " / " + fixed(p.ua, 2) + " / " + (p.f1 ? fixed(*p.f1, 2) : "-");
    } else {
      csv += ",,";
    }
    csv += "\n";
    table << pad(std::to_string(row.layer), 8) << pad(format_mean_std(a.wa), w)
          << pad(format_mean_std(a.ua), w) << pad(format_mean_std(a.f1), w) << published << "\n";
  }
  write_text(dir / "sweep.csv", csv);
  write_text(dir / "sweep.txt", table.str());
  write_config_echo(config, dir);
}

}  // namespace attnpool
