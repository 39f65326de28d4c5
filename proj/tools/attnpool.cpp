// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "attnpool/checkpoint.hpp"
#include "attnpool/error.hpp"
#include "attnpool/feature_source.hpp"
#include "attnpool/gradcheck.hpp"
#include "attnpool/manifest.hpp"
#include "attnpool/reference.hpp"
#include "attnpool/report.hpp"
#include "attnpool/synthetic.hpp"
#include "attnpool/training.hpp"

namespace fs = std::filesystem;
using namespace attnpool;

namespace {

struct ExperimentFlags {
  std::string manifest;
  std::string out;
  std::string pooling = "qkv";
  std::size_t heads = 6;
  std::size_t d_hidden = 4;
  std::size_t d_model = 256;
  double dropout = 0.1;
  std::optional<int> layer;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double peak_lr = 1e-4;
  double warmup = 0.1;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

void add_experiment_flags(CLI::App& cmd, ExperimentFlags& f, bool with_layer) {
  cmd.add_option("--manifest", f.manifest, "Dataset manifest")->required();
  cmd.add_option("--out", f.out, "Output directory")->required();
  cmd.add_option("--pooling", f.pooling, "mean | attentive | qkv")
      ->check(CLI::IsMember({"mean", "attentive", "qkv"}))
      ->capture_default_str();
  cmd.add_option("--heads", f.heads, "Attention heads")->capture_default_str();
  cmd.add_option("--d-hidden", f.d_hidden, "Hidden size per head")->capture_default_str();
  cmd.add_option("--d-model", f.d_model, "Projector width")->capture_default_str();
  cmd.add_option("--dropout", f.dropout, "Scorer dropout rate")->capture_default_str();
  if (with_layer) cmd.add_option("--layer", f.layer, "Encoder layer (default: first listed)");
  cmd.add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  cmd.add_option("--batch-size", f.batch_size, "Batch size")->capture_default_str();
  cmd.add_option("--peak-lr", f.peak_lr, "Peak learning rate")->capture_default_str();
  cmd.add_option("--warmup", f.warmup, "Warmup fraction of all steps")->capture_default_str();
  cmd.add_option("--weight-decay", f.weight_decay, "AdamW weight decay")->capture_default_str();
  cmd.add_option("--seed", f.seed, "Experiment seed")->capture_default_str();
  cmd.add_option("--jobs", f.jobs, "Folds trained in parallel")->capture_default_str();
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ModelConfig model_config(const ExperimentFlags& f, const DatasetManifest& m, int layer) {
  ModelConfig c;
  c.d_enc = m.d_enc;
  c.d_model = f.d_model;
  c.num_heads = f.heads;
  c.d_hidden = f.d_hidden;
  c.num_classes = m.num_classes();
  c.pooling = parse_pooling(f.pooling);
  c.dropout_rate = f.dropout;
  c.encoder_layer = layer;
  c.validate();
  return c;
}

TrainConfig train_config(const ExperimentFlags& f) {
  TrainConfig t;
  t.epochs = f.epochs;
  t.batch_size = f.batch_size;
  t.schedule.peak_lr = f.peak_lr;
  t.schedule.warmup_fraction = f.warmup;
  t.adamw.weight_decay = f.weight_decay;
  t.seed = f.seed;
  t.jobs = f.jobs;
  t.validate();
  return t;
}

ConfigEcho echo(const std::string& command, const ExperimentFlags& f, const ModelConfig& m,
                const TrainConfig& t) {
  return {{"command", command},
          {"manifest", f.manifest},
          {"pooling", std::string(to_string(m.pooling))},
          {"d_enc", std::to_string(m.d_enc)},
          {"d_model", std::to_string(m.d_model)},
          {"num_heads", std::to_string(m.num_heads)},
          {"d_hidden", std::to_string(m.d_hidden)},
          {"num_classes", std::to_string(m.num_classes)},
          {"dropout", num(m.dropout_rate)},
          {"layer", std::to_string(m.encoder_layer)},
          {"trainable_params", std::to_string(count_trainable_params(m))},
          {"epochs", std::to_string(t.epochs)},
          {"batch_size", std::to_string(t.batch_size)},
          {"peak_lr", num(t.schedule.peak_lr)},
          {"warmup_fraction", num(t.schedule.warmup_fraction)},
          {"beta1", num(t.adamw.beta1)},
          {"beta2", num(t.adamw.beta2)},
          {"epsilon", num(t.adamw.epsilon)},
          {"weight_decay", num(t.adamw.weight_decay)},
          {"seed", std::to_string(t.seed)},
          {"jobs", std::to_string(t.jobs)}};
}

int resolve_layer(const ExperimentFlags& f, const DatasetManifest& m) {
  const int layer = f.layer.value_or(m.layers.front());
  if (!m.has_layer(layer)) {
    throw DataError("layer " + std::to_string(layer) + " is not listed in the manifest");
  }
  return layer;
}

std::optional<PublishedScores> reference_for(const DatasetManifest& m, std::string_view pooling,
                                             std::optional<int> layer) {
  if (m.dataset.empty() || m.model_size.empty()) return std::nullopt;
  try {
    return published_reference(m.dataset, m.model_size, pooling, layer);
  } catch (const LookupError&) {
    return std::nullopt;
  }
}

std::vector<int> parse_layer_list(const std::string& text) {
  std::vector<int> layers;
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad layer list '" + text + "'");
    }
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = to_int(text.substr(0, dots));
    const int hi = to_int(text.substr(dots + 2));
    if (hi < lo) throw ConfigError("bad layer range '" + text + "'");
    for (int l = lo; l <= hi; ++l) layers.push_back(l);
  } else {
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
      if (!item.empty()) layers.push_back(to_int(item));
    }
  }
  if (layers.empty()) throw ConfigError("empty layer list");
  return layers;
}

CrossValidationResult run_cv(const DatasetManifest& m, const ModelConfig& mc,
                             const TrainConfig& tc) {
  std::cerr << "layer " << mc.encoder_layer << ": loading features\n";
  ManifestFeatures features(m, mc.encoder_layer);
  std::cerr << "layer " << mc.encoder_layer << ": " << m.fold_count << "-fold cross-validation, "
            << to_string(mc.pooling) << " pooling\n";
  auto result = cross_validate(m, features, mc, tc);
  for (const auto& r : result.folds) {
    std::fprintf(stderr, "  fold %zu: WA %.2f UA %.2f F1 %.2f\n", r.fold, 100 * r.wa, 100 * r.ua,
                 100 * r.f1);
  }
  return result;
}

int cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& out) {
  const auto data = generate_synthetic(spec);
  write_synthetic(data, out);
  write_config_echo({{"command", "gen-synthetic"},
                     {"classes", std::to_string(spec.classes)},
                     {"per_class", std::to_string(spec.per_class)},
                     {"frames", std::to_string(spec.frames)},
                     {"d_enc", std::to_string(spec.d_enc)},
                     {"salient", std::to_string(spec.salient_frames)},
                     {"sigma", num(spec.noise_sigma)},
                     {"signature_scale", num(spec.signature_scale)},
                     {"folds", std::to_string(spec.folds)},
                     {"layers", std::to_string(spec.layers)},
                     {"seed", std::to_string(spec.seed)}},
                    out);
  std::cout << "wrote " << data.manifest.records.size() << " utterances to " << out << "\n";
  return 0;
}

int cmd_train(const ExperimentFlags& f, std::size_t fold) {
  const auto m = load_manifest(f.manifest);
  const int layer = resolve_layer(f, m);
  const auto mc = model_config(f, m, layer);
  const auto tc = train_config(f);
  ManifestFeatures features(m, layer);
  const auto trained = train_fold(m, features, fold, mc, tc);
  const fs::path out(f.out);
  save_checkpoint(trained.model, out / "model");

  std::string history = "epoch,mean_loss,running_accuracy,lr\n";
  for (const auto& e : trained.history) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.9g\n", e.epoch, e.mean_loss,
                  e.running_accuracy, e.final_lr);
    history += buf;
  }
  std::ofstream(out / "history.csv", std::ios::binary) << history;

  const auto split = split_fold(m, fold);
  std::vector<FoldReport> reports;
  if (!split.test.empty()) {
    reports.push_back(make_fold_report(
        fold, evaluate(trained.model, features, manifest_labels(m), split.test, m.class_names)));
  }
  auto config = echo("train", f, mc, tc);
  config.emplace_back("fold", std::to_string(fold));
  if (reports.empty()) {
    write_config_echo(config, out);
  } else {
    emit_report({std::string(to_string(mc.pooling)), reports, aggregate(reports), config,
                 reference_for(m, to_string(mc.pooling), layer)},
                out);
    std::cout << summary_table({std::string(to_string(mc.pooling)), reports, aggregate(reports),
                                config, std::nullopt});
  }
  std::printf("train accuracy %.4f\n", trained.train_accuracy);
  return 0;
}

int cmd_cross_validate(const ExperimentFlags& f) {
  const auto m = load_manifest(f.manifest);
  const int layer = resolve_layer(f, m);
  const auto mc = model_config(f, m, layer);
  const auto tc = train_config(f);
  const auto result = run_cv(m, mc, tc);
  const ReportInput input{std::string(to_string(mc.pooling)), result.folds, result.aggregate,
                          echo("cross-validate", f, mc, tc),
                          reference_for(m, to_string(mc.pooling), layer)};
  emit_report(input, f.out);
  std::cout << summary_table(input);
  return 0;
}

int cmd_sweep_layers(const ExperimentFlags& f, const std::string& layer_text) {
  const auto m = load_manifest(f.manifest);
  const auto layers = parse_layer_list(layer_text);
  for (int l : layers) {
    if (!m.has_layer(l)) {
      throw DataError("layer " + std::to_string(l) + " has no features in the manifest");
    }
  }
  const auto tc = train_config(f);
  std::vector<SweepRow> rows;
  ConfigEcho config;
  for (int l : layers) {
    const auto mc = model_config(f, m, l);
    if (config.empty()) {
      config = echo("sweep-layers", f, mc, tc);
      config.emplace_back("layers", layer_text);
    }
    const auto result = run_cv(m, mc, tc);
    const fs::path layer_dir = fs::path(f.out) / ("layer" + std::to_string(l));
    auto layer_config = echo("sweep-layers", f, mc, tc);
    emit_report({std::string(to_string(mc.pooling)), result.folds, result.aggregate, layer_config,
                 reference_for(m, to_string(mc.pooling), l)},
                layer_dir);
    rows.push_back({l, result.aggregate, reference_for(m, to_string(mc.pooling), l)});
  }
  emit_sweep_report(rows, config, f.out);
  std::ifstream table(fs::path(f.out) / "sweep.txt");
  std::cout << table.rdbuf();
  return 0;
}

int cmd_gradcheck(const std::string& method, std::uint64_t seed, bool training,
                  const std::string& out) {
  std::vector<PoolingMethod> methods;
  if (method == "all") {
    methods = {PoolingMethod::kMean, PoolingMethod::kAttentive, PoolingMethod::kQkv};
  } else {
    methods = {parse_pooling(method)};
  }
  bool ok = true;
  std::string csv = "pooling,mode,tensor,entries,max_abs_error,max_rel_error,passed\n";
  for (auto pooling : methods) {
    GradcheckOptions o;
    o.pooling = pooling;
    o.seed = seed;
    o.training = training;
    const auto report = run_gradcheck(o);
    for (const auto& t : report.tensors) {
      std::printf("%-10s %-6s %-20s max rel err %.3e  %s\n", std::string(to_string(pooling)).c_str(),
                  training ? "train" : "eval", t.name.c_str(), t.max_rel_error,
                  t.passed ? "PASS" : "FAIL");
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%s,%s,%zu,%.6e,%.6e,%d\n",
                    std::string(to_string(pooling)).c_str(), training ? "train" : "eval",
                    t.name.c_str(), t.entries, t.max_abs_error, t.max_rel_error, t.passed ? 1 : 0);
      csv += buf;
    }
    ok = ok && report.passed();
  }
  if (!out.empty()) {
    write_config_echo({{"command", "gradcheck"},
                       {"method", method},
                       {"seed", std::to_string(seed)},
                       {"training", training ? "true" : "false"}},
                      out);
    std::ofstream(fs::path(out) / "gradcheck.csv", std::ios::binary) << csv;
  }
  return ok ? 0 : 1;
}

int cmd_report(const std::string& dataset, const std::string& size, const std::string& pooling,
               std::optional<int> layer, const std::string& out) {
  std::string text;
  std::string csv = "dataset,model_size,pooling,layer,wa,wa_std,ua,ua_std,f1,f1_std\n";
  auto matches = [](const std::string& want, const std::string& have) {
    return want.empty() || want == have;
  };
  std::size_t count = 0;
  for (const auto& e : published_references()) {
    if (!matches(dataset, e.dataset) || !matches(size, e.model_size) ||
        !matches(pooling, e.pooling) || (layer && e.layer != layer)) {
      continue;
    }
    const auto& s = e.scores;
    const std::string layer_text = e.layer ? std::to_string(*e.layer) : "";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8s %-6s %-10s %-5s WA %-14s UA %-14s F1 %s\n",
                  e.dataset.c_str(), e.model_size.c_str(), e.pooling.c_str(),
                  layer_text.empty() ? "best" : layer_text.c_str(),
                  format_mean_std(s.wa, s.wa_std).c_str(), format_mean_std(s.ua, s.ua_std).c_str(),
                  s.f1 ? format_mean_std(*s.f1, s.f1_std.value_or(0.0)).c_str() : "-");
    text += buf;
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%.2f,%.2f,%.2f,%.2f,", e.dataset.c_str(),
                  e.model_size.c_str(), e.pooling.c_str(), layer_text.c_str(), s.wa, s.wa_std,
                  s.ua, s.ua_std);
    csv += buf;
    if (s.f1) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f", *s.f1, s.f1_std.value_or(0.0));
      csv += buf;
    } else {
      csv += ",";
    }
    csv += "\n";
    ++count;
  }
  if (count == 0) throw LookupError("no published results match the given filters");
  std::cout << text;
  if (!out.empty()) {
    write_config_echo({{"command", "report"},
                       {"dataset", dataset},
                       {"model_size", size},
                       {"pooling", pooling},
                       {"layer", layer ? std::to_string(*layer) : ""}},
                      out);
    std::ofstream(fs::path(out) / "published.csv", std::ios::binary) << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-pooling heads over frozen speech-encoder features"};
  app.require_subcommand(1);

  SyntheticSpec spec;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a planted-saliency synthetic dataset");
  gen->add_option("--classes", spec.classes)->capture_default_str();
  gen->add_option("--per-class", spec.per_class)->capture_default_str();
  gen->add_option("--frames", spec.frames)->capture_default_str();
  gen->add_option("--d-enc", spec.d_enc)->capture_default_str();
  gen->add_option("--salient", spec.salient_frames, "Class-bearing frames per utterance")
      ->capture_default_str();
  gen->add_option("--sigma", spec.noise_sigma, "Frame noise standard deviation")
      ->capture_default_str();
  gen->add_option("--signature-scale", spec.signature_scale)->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_option("--folds", spec.folds)->capture_default_str();
  gen->add_option("--layers", spec.layers, "Encoder layers to emit")->capture_default_str();
  gen->add_option("--out", synth_out)->required();

  ExperimentFlags train_flags;
  std::size_t fold = 0;
  auto* train = app.add_subcommand("train", "Train on all folds but one and evaluate on it");
  add_experiment_flags(*train, train_flags, true);
  train->add_option("--fold", fold, "Held-out fold")->capture_default_str();

  ExperimentFlags cv_flags;
  auto* cv = app.add_subcommand("cross-validate", "k-fold cross-validation for one layer");
  add_experiment_flags(*cv, cv_flags, true);

  ExperimentFlags sweep_flags;
  std::string layer_text;
  auto* sweep = app.add_subcommand("sweep-layers", "Cross-validate every requested layer");
  add_experiment_flags(*sweep, sweep_flags, false);
  sweep->add_option("--layers", layer_text, "Range such as 1..4 or a list such as 2,5,8")
      ->required();

  std::string gc_method = "all";
  std::uint64_t gc_seed = 1;
  bool gc_training = false;
  std::string gc_out;
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients");
  gc->add_option("--method", gc_method, "all | mean | attentive | qkv")
      ->check(CLI::IsMember({"all", "mean", "attentive", "qkv"}))
      ->capture_default_str();
  gc->add_option("--seed", gc_seed)->capture_default_str();
  gc->add_flag("--training", gc_training, "Check the training graph with a fixed dropout mask");
  gc->add_option("--out", gc_out, "Optional output directory");

  std::string rp_dataset, rp_size, rp_pooling, rp_out;
  std::optional<int> rp_layer;
  auto* rp = app.add_subcommand("report", "Print published reference results");
  rp->add_option("--dataset", rp_dataset, "shemo | iemocap");
  rp->add_option("--model-size", rp_size, "tiny | small");
  rp->add_option("--pooling", rp_pooling, "mean | attentive | qkv");
  rp->add_option("--layer", rp_layer, "Encoder layer");
  rp->add_option("--out", rp_out, "Optional output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_gen_synthetic(spec, synth_out);
    if (*train) return cmd_train(train_flags, fold);
    if (*cv) return cmd_cross_validate(cv_flags);
    if (*sweep) return cmd_sweep_layers(sweep_flags, layer_text);
    if (*gc) return cmd_gradcheck(gc_method, gc_seed, gc_training, gc_out);
    if (*rp) return cmd_report(rp_dataset, rp_size, rp_pooling, rp_layer, rp_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
