// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "attnpool/error.hpp"

namespace attnpool {

namespace {

constexpr const char* kFormatLine = "attnpool-manifest 1";

using Kind = ManifestError::Kind;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

template <typename T>
T parse_number(const std::string& token, std::size_t line_no, const char* what) {
  T value{};
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ManifestError(Kind::kSyntax, "manifest line " + std::to_string(line_no) + ": bad " +
                                           what + " '" + token + "'");
  }
  return value;
}

}  // namespace

bool DatasetManifest::has_layer(int layer) const {
  return std::find(layers.begin(), layers.end(), layer) != layers.end();
}

std::filesystem::path DatasetManifest::feature_path(const UtteranceRecord& record,
                                                    int layer) const {
  std::string resolved = record.feature_template;
  const std::string placeholder = "{layer}";
  for (auto pos = resolved.find(placeholder); pos != std::string::npos;
       pos = resolved.find(placeholder, pos)) {
    resolved.replace(pos, placeholder.size(), std::to_string(layer));
  }
  std::filesystem::path p(resolved);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p;
}

void validate_manifest(const DatasetManifest& m, ManifestValidation options) {
  if (m.class_names.size() < 2) {
    throw ManifestError(Kind::kTooFewClasses, "manifest: need at least 2 classes, got " +
                                                  std::to_string(m.class_names.size()));
  }
  if (m.fold_count == 0) throw ManifestError(Kind::kSyntax, "manifest: folds must be >= 1");
  std::vector<bool> fold_seen(m.fold_count, false);
  std::unordered_set<std::string> ids;
  for (const auto& r : m.records) {
    if (r.label >= m.class_names.size()) {
      throw ManifestError(Kind::kLabelOutOfRange,
                          "manifest: record '" + r.id + "' label " + std::to_string(r.label) +
                              " >= class count " + std::to_string(m.class_names.size()));
    }
    if (r.fold >= m.fold_count) {
      throw ManifestError(Kind::kFoldOutOfRange,
                          "manifest: record '" + r.id + "' fold " + std::to_string(r.fold) +
                              " outside [0, " + std::to_string(m.fold_count) + ")");
    }
    if (!ids.insert(r.id).second) {
      throw ManifestError(Kind::kDuplicateRecord, "manifest: duplicate record id '" + r.id + "'");
    }
    fold_seen[r.fold] = true;
  }
  for (std::size_t f = 0; f < m.fold_count; ++f) {
    if (!fold_seen[f]) {
      throw ManifestError(Kind::kMissingFold,
                          "manifest: fold " + std::to_string(f) + " has no records");
    }
  }
  if (options.check_files) {
    for (const auto& r : m.records) {
      for (int layer : m.layers) {
        const auto p = m.feature_path(r, layer);
        if (!std::filesystem::exists(p)) {
          throw ManifestError(Kind::kDanglingReference,
                              "manifest: record '" + r.id + "' layer " + std::to_string(layer) +
                                  " references missing file " + p.string());
        }
      }
    }
  }
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                               ManifestValidation options) {
  DatasetManifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool in_records = false;
  bool saw_format = false;
  std::set<std::string> seen_keys;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (in_records) {
      const auto tok = split_ws(body);
      if (tok.size() != 5) {
        throw ManifestError(Kind::kSyntax, "manifest line " + std::to_string(line_no) +
                                               ": expected 5 fields, got " +
                                               std::to_string(tok.size()));
      }
      UtteranceRecord r;
      r.id = tok[0];
      r.label = parse_number<std::size_t>(tok[1], line_no, "label");
      r.group = parse_number<int>(tok[2], line_no, "group");
      r.fold = parse_number<std::size_t>(tok[3], line_no, "fold");
      r.feature_template = tok[4];
      m.records.push_back(std::move(r));
      continue;
    }
    const auto colon = body.find(':');
    if (colon == std::string::npos) {
      throw ManifestError(Kind::kSyntax,
                          "manifest line " + std::to_string(line_no) + ": expected 'key: value'");
    }
    const std::string key = trim(body.substr(0, colon));
    const std::string value = trim(body.substr(colon + 1));
    if (!seen_keys.insert(key).second) {
      throw ManifestError(Kind::kSyntax, "manifest line " + std::to_string(line_no) +
                                             ": duplicate key '" + key + "'");
    }
    if (key == "format") {
      if (value != kFormatLine) {
        throw ManifestError(Kind::kSyntax, "manifest: unsupported format '" + value + "'");
      }
      saw_format = true;
    } else if (key == "classes") {
      m.class_names = split_ws(value);
    } else if (key == "folds") {
      m.fold_count = parse_number<std::size_t>(value, line_no, "fold count");
    } else if (key == "d_enc") {
      m.d_enc = parse_number<std::size_t>(value, line_no, "d_enc");
    } else if (key == "layers") {
      for (const auto& tok : split_ws(value)) {
        m.layers.push_back(parse_number<int>(tok, line_no, "layer"));
      }
    } else if (key == "dataset") {
      m.dataset = value;
    } else if (key == "model_size") {
      m.model_size = value;
    } else if (key == "records") {
      in_records = true;
    } else {
      throw ManifestError(Kind::kSyntax, "manifest line " + std::to_string(line_no) +
                                             ": unknown key '" + key + "'");
    }
  }
  if (!saw_format) throw ManifestError(Kind::kSyntax, "manifest: missing 'format:' line");
  if (!in_records) throw ManifestError(Kind::kSyntax, "manifest: missing 'records:' section");
  if (m.layers.empty()) throw ManifestError(Kind::kSyntax, "manifest: no layers listed");
  validate_manifest(m, options);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path, ManifestValidation options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), path.parent_path(), options);
}

std::string format_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << "format: " << kFormatLine << '\n';
  out << "classes:";
  for (const auto& c : m.class_names) out << ' ' << c;
  out << "\nfolds: " << m.fold_count << '\n';
  out << "d_enc: " << m.d_enc << '\n';
  out << "layers:";
  for (int l : m.layers) out << ' ' << l;
  out << '\n';
  if (!m.dataset.empty()) out << "dataset: " << m.dataset << '\n';
  if (!m.model_size.empty()) out << "model_size: " << m.model_size << '\n';
  out << "records:\n";
  for (const auto& r : m.records) {
    out << r.id << ' ' << r.label << ' ' << r.group << ' ' << r.fold << ' ' << r.feature_template
        << '\n';
  }
  return out.str();
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << format_manifest(m);
  if (!out) throw IoError("write failed: " + path.string());
}

FoldSplit split_fold(const DatasetManifest& m, std::size_t fold) {
  if (fold >= m.fold_count) {
    throw IndexError("fold " + std::to_string(fold) + " outside [0, " +
                     std::to_string(m.fold_count) + ")");
  }
  FoldSplit split;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    (m.records[i].fold == fold ? split.test : split.train).push_back(i);
  }
  return split;
}

}  // namespace attnpool
