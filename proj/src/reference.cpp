// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/reference.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "attnpool/error.hpp"

namespace attnpool {

namespace detail {
extern const std::string_view kPublishedReferenceCsv;
}  // namespace detail

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::vector<ReferenceEntry> parse_table() {
  std::vector<ReferenceEntry> rows;
  std::istringstream in{std::string(detail::kPublishedReferenceCsv)};
  bool header = true;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 10) throw Error("embedded reference table: malformed row '" + line + "'");
    ReferenceEntry e;
    e.dataset = f[0];
    e.model_size = f[1];
    e.pooling = f[2];
    if (!f[3].empty()) e.layer = std::stoi(f[3]);
    e.scores.wa = std::stod(f[4]);
    e.scores.wa_std = std::stod(f[5]);
    e.scores.ua = std::stod(f[6]);
    e.scores.ua_std = std::stod(f[7]);
    if (!f[8].empty()) e.scores.f1 = std::stod(f[8]);
    if (!f[9].empty()) e.scores.f1_std = std::stod(f[9]);
    rows.push_back(std::move(e));
  }
  return rows;
}

}  // namespace

const std::vector<ReferenceEntry>& published_references() {
  static const std::vector<ReferenceEntry> table = parse_table();
  return table;
}

PublishedScores published_reference(std::string_view dataset, std::string_view model_size,
                                    std::string_view pooling, std::optional<int> layer) {
  const std::string d = lower(dataset), s = lower(model_size), p = lower(pooling);
  for (const auto& e : published_references()) {
    if (e.dataset == d && e.model_size == s && e.pooling == p && e.layer == layer) {
      return e.scores;
    }
  }
  std::string key = d + "/" + s + "/" + p;
  if (layer) key += "/layer " + std::to_string(*layer);
  throw LookupError("no published reference for " + key);
}

}  // namespace attnpool
