// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "attnpool/error.hpp"
#include "attnpool/features.hpp"

namespace attnpool {

namespace {

constexpr const char* kCheckpointFormat = "attnpool-checkpoint 1";

std::string file_name_for(const std::string& parameter) { return parameter + ".fea"; }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t to_size(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError("checkpoint: bad value for " + key + ": '" + s + "'");
  }
}

}  // namespace

void save_checkpoint(const HeadModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& c = model.config();
  std::ostringstream cfg;
  cfg << "format: " << kCheckpointFormat << '\n'
      << "pooling: " << to_string(c.pooling) << '\n'
      << "d_enc: " << c.d_enc << '\n'
      << "d_model: " << c.d_model << '\n'
      << "num_heads: " << c.num_heads << '\n'
      << "d_hidden: " << c.d_hidden << '\n'
      << "num_classes: " << c.num_classes << '\n'
      << "dropout_rate: " << format_double(c.dropout_rate) << '\n'
      << "encoder_layer: " << c.encoder_layer << '\n'
      << "parameters:\n";
  for (const auto& p : model.parameters()) {
    const std::string file = file_name_for(p.name);
    cfg << p.name << ' ' << p.value->rows() << ' ' << p.value->cols() << ' ' << file << '\n';
    write_features(RepresentationMatrix::from_matrix(*p.value), dir / file);
  }
  std::ofstream out(dir / "model.txt", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "model.txt").string());
  out << cfg.str();
}

HeadModel load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.txt");
  if (!in) throw IoError("cannot open " + (dir / "model.txt").string());
  std::map<std::string, std::string> keys;
  struct Entry {
    std::string name;
    std::size_t rows, cols;
    std::string file;
  };
  std::vector<Entry> entries;
  bool in_params = false;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    if (in_params) {
      std::istringstream ls(line);
      Entry e;
      if (!(ls >> e.name >> e.rows >> e.cols >> e.file)) {
        throw FormatError("checkpoint: bad parameter line '" + line + "'");
      }
      entries.push_back(std::move(e));
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw FormatError("checkpoint: bad line '" + line + "'");
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.erase(0, 1);
    if (key == "parameters") {
      in_params = true;
    } else {
      keys[key] = value;
    }
  }
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = keys.find(key);
    if (it == keys.end()) throw FormatError("checkpoint: missing '" + key + "'");
    return it->second;
  };
  if (require("format") != kCheckpointFormat) {
    throw FormatError("checkpoint: unsupported format '" + keys["format"] + "'");
  }
  ModelConfig c;
  try {
    c.pooling = parse_pooling(require("pooling"));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  c.d_enc = to_size(require("d_enc"), "d_enc");
  c.d_model = to_size(require("d_model"), "d_model");
  c.num_heads = to_size(require("num_heads"), "num_heads");
  c.d_hidden = to_size(require("d_hidden"), "d_hidden");
  c.num_classes = to_size(require("num_classes"), "num_classes");
  c.dropout_rate = std::stod(require("dropout_rate"));
  c.encoder_layer = std::stoi(require("encoder_layer"));

  HeadModel model(c);
  auto params = model.parameters();
  if (params.size() != entries.size()) {
    throw FormatError("checkpoint: expected " + std::to_string(params.size()) +
                      " parameters, found " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = entries[i];
    Matrix& target = *params[i].value;
    if (e.name != params[i].name) {
      throw FormatError("checkpoint: parameter " + std::to_string(i) + " is '" + e.name +
                        "', expected '" + params[i].name + "'");
    }
    const Matrix stored = read_features(dir / e.file).to_matrix();
    if (stored.shape() != target.shape() || stored.shape() != Shape{e.rows, e.cols}) {
      throw ShapeError("checkpoint: " + e.name + " stored as " + stored.shape().str() +
                       ", expected " + target.shape().str());
    }
    target = stored;
  }
  return model;
}

}  // namespace attnpool
