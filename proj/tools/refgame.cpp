// Copyright 2026 The refgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver. Exit codes: 0 success, 1 runtime failure, 2 usage or
// configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "refgame/refgame.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace refgame::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// ---- config files ----

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path);
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": top level must be a JSON object");
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown " + what + " key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

// Every output directory gets the resolved configuration and the version.
void write_resolved(const fs::path& dir, json resolved) {
  fs::create_directories(dir);
  resolved["version"] = REFGAME_VERSION;
  write_json(dir / "resolved_config.json", resolved);
}

data::Dataset load_data(const std::string& dir) {
  if (dir.empty()) throw ConfigError("no dataset given (--data or config key 'dataset')");
  if (!fs::is_regular_file(fs::path(dir) / "manifest.json")) {
    throw ConfigError("dataset directory has no manifest.json: " + dir);
  }
  return data::load_dataset(dir);
}

std::string checksum(const nn::ParamSet& params, const std::string& prefix) {
  std::vector<char> bytes;
  for (const auto& t : params.tensors()) {
    if (!t.name.starts_with(prefix)) continue;
    const auto* p = reinterpret_cast<const char*>(t.values.data());
    bytes.insert(bytes.end(), p, p + t.values.size() * static_cast<Eigen::Index>(sizeof(double)));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(io::fnv1a(bytes)));
  return buf;
}

// ---- gen-data / import-data ----

std::vector<int> class_range(int begin, int end) {
  std::vector<int> ids;
  for (int c = begin; c < end; ++c) ids.push_back(c);
  return ids;
}

const std::set<std::string> kSplitKeys = {"train", "val", "test", "held_out"};

data::SplitCounts split_counts(const json& j, data::SplitCounts d) {
  d.train = get_or(j, "train", d.train);
  d.val = get_or(j, "val", d.val);
  d.test = get_or(j, "test", d.test);
  d.held_out = get_or(j, "held_out", d.held_out);
  return d;
}

void print_classes(const data::Dataset& ds) {
  std::cout << ds.num_classes() << " classes, sender_dim " << ds.sender_dim << ", receiver_dim "
            << ds.receiver_dim << "\n";
  for (int c = 0; c < ds.num_classes(); ++c) {
    std::cout << "  " << c << " " << ds.class_names[c];
    if (ds.difficulty.size() > static_cast<std::size_t>(c) && ds.difficulty[c]) {
      std::cout << " difficulty " << analysis::fmt(*ds.difficulty[c]);
    }
    std::cout << "\n";
  }
  for (const auto& s : ds.splits) {
    std::cout << "  split " << s.name << ": " << s.num_views() << " views, " << s.candidates.size()
              << " candidates\n";
  }
}

int cmd_gen_data(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
  json j = read_config(spec_path);
  std::set<std::string> allowed = {"n_classes",   "n_attributes",      "sender_dim",  "receiver_dim",
                                   "views_per_class", "noise",         "hard_pairs",  "seed",
                                   "sender_regions", "receiver_word_sets", "out_of_domain_classes",
                                   "transfer_classes"};
  allowed.insert(kSplitKeys.begin(), kSplitKeys.end());
  reject_unknown(j, allowed, "dataset spec");
  if (seed) j["seed"] = *seed;

  data::SyntheticSpec s;
  s.n_classes = get_or(j, "n_classes", s.n_classes);
  s.n_attributes = get_or(j, "n_attributes", s.n_attributes);
  s.sender_dim = get_or(j, "sender_dim", s.sender_dim);
  s.receiver_dim = get_or(j, "receiver_dim", s.receiver_dim);
  s.views_per_class = get_or(j, "views_per_class", s.views_per_class);
  s.noise = get_or(j, "noise", s.noise);
  s.hard_pairs = get_or(j, "hard_pairs", s.hard_pairs);
  s.seed = get_or(j, "seed", s.seed);
  s.sender_regions = get_or(j, "sender_regions", s.sender_regions);
  s.receiver_word_sets = get_or(j, "receiver_word_sets", s.receiver_word_sets);
  s.validate();
  const int ood = get_or(j, "out_of_domain_classes", 0);
  const int transfer = get_or(j, "transfer_classes", 0);
  if (ood < 0 || transfer < 0 || ood + transfer >= s.n_classes) {
    throw ConfigError("held-out class counts must leave at least one in-domain class");
  }
  const data::SplitCounts counts = split_counts(j, {70, 20, 10, 100});

  // Held-out classes are taken from the end of the class list.
  const int in_domain = s.n_classes - ood - transfer;
  std::vector<std::string> warnings;
  const data::Dataset ds =
      data::make_splits(data::generate_synthetic(s), class_range(0, in_domain), class_range(in_domain, in_domain + ood),
                        class_range(in_domain + ood, s.n_classes), counts, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  data::save_dataset(ds, out);

  json resolved = s;
  resolved["out_of_domain_classes"] = ood;
  resolved["transfer_classes"] = transfer;
  resolved["train"] = counts.train;
  resolved["val"] = counts.val;
  resolved["test"] = counts.test;
  resolved["held_out"] = counts.held_out;
  write_resolved(out, resolved);
  print_classes(ds);
  return kExitOk;
}

int cmd_import_data(const std::string& features, const std::string& descriptions, const std::string& embeddings,
                    const std::string& config_path, bool word_sets, const std::string& out) {
  json j = read_config(config_path);
  std::set<std::string> allowed = {"out_of_domain", "transfer", "word_sets"};
  allowed.insert(kSplitKeys.begin(), kSplitKeys.end());
  reject_unknown(j, allowed, "import");
  word_sets = word_sets || get_or(j, "word_sets", false);
  for (const auto& p : {features, descriptions, embeddings}) {
    if (!fs::is_regular_file(p)) throw ConfigError("input file not found: " + p);
  }
  data::Dataset ds = data::import_dataset(features, descriptions, embeddings, word_sets);

  std::map<std::string, int> index;
  for (int c = 0; c < ds.num_classes(); ++c) index[ds.class_names[c]] = c;
  auto ids = [&](const char* key) {
    std::vector<int> out_ids;
    for (const auto& name : get_or(j, key, std::vector<std::string>{})) {
      auto it = index.find(name);
      if (it == index.end()) throw ConfigError(std::string(key) + " names unknown class '" + name + "'");
      out_ids.push_back(it->second);
    }
    return out_ids;
  };
  const std::vector<int> ood = ids("out_of_domain");
  const std::vector<int> transfer = ids("transfer");
  std::set<int> held(ood.begin(), ood.end());
  held.insert(transfer.begin(), transfer.end());
  std::vector<int> in_domain;
  for (int c = 0; c < ds.num_classes(); ++c) {
    if (!held.count(c)) in_domain.push_back(c);
  }
  const data::SplitCounts counts = split_counts(j, {});
  std::vector<std::string> warnings;
  ds = data::make_splits(std::move(ds), in_domain, ood, transfer, counts, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  data::save_dataset(ds, out);

  json resolved = j;
  resolved["features"] = features;
  resolved["descriptions"] = descriptions;
  resolved["embeddings"] = embeddings;
  resolved["word_sets"] = word_sets;
  resolved["train"] = counts.train;
  resolved["val"] = counts.val;
  resolved["test"] = counts.test;
  resolved["held_out"] = counts.held_out;
  write_resolved(out, resolved);
  print_classes(ds);
  return kExitOk;
}

// ---- train ----

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> ablation;
  std::optional<int> message_dim;
  std::optional<long> max_updates;
  std::optional<int> max_epochs;
  std::optional<double> learning_rate;
  std::string dataset;
};

const std::set<std::string> kTrainKeys = {
    "dataset",         "message_dim",  "sender",        "receiver",   "sender_embed_dim",
    "sender_hidden",   "sender_attention_hidden",       "memory_dim", "receiver_attention_hidden",
    "baseline_hidden", "learning_rate", "rho",          "eps",        "lambda_stop",
    "lambda_msg",      "batch_size",   "max_steps",     "max_epochs", "max_updates",
    "patience",        "seed",         "ablation",      "threads",    "k",
    "sender_input_dim", "receiver_input_dim"};

json resolve_train_json(const std::string& config_path, const TrainOverrides& o) {
  json j = read_config(config_path);
  reject_unknown(j, kTrainKeys, "training config");
  if (o.seed) j["seed"] = *o.seed;
  if (o.threads) j["threads"] = *o.threads;
  if (o.ablation) j["ablation"] = *o.ablation;
  if (o.message_dim) j["message_dim"] = *o.message_dim;
  if (o.max_updates) j["max_updates"] = *o.max_updates;
  if (o.max_epochs) j["max_epochs"] = *o.max_epochs;
  if (o.learning_rate) j["learning_rate"] = *o.learning_rate;
  if (!o.dataset.empty()) j["dataset"] = o.dataset;
  return j;
}

training::TrainConfig train_config(const json& j, const data::Dataset& ds) {
  training::TrainConfig c;
  auto& m = c.model;
  m.message_dim = get_or(j, "message_dim", m.message_dim);
  m.sender = agents::kind_from_string<agents::SenderKind>(get_or(j, "sender", agents::to_string(m.sender)));
  m.receiver =
      agents::kind_from_string<agents::ReceiverKind>(get_or(j, "receiver", agents::to_string(m.receiver)));
  m.sender_embed_dim = get_or(j, "sender_embed_dim", m.sender_embed_dim);
  m.sender_hidden = get_or(j, "sender_hidden", m.sender_hidden);
  m.sender_attention_hidden = get_or(j, "sender_attention_hidden", m.sender_attention_hidden);
  m.memory_dim = get_or(j, "memory_dim", m.memory_dim);
  m.receiver_attention_hidden = get_or(j, "receiver_attention_hidden", m.receiver_attention_hidden);
  m.baseline_hidden = get_or(j, "baseline_hidden", m.baseline_hidden);
  m.sender_input_dim = get_or(j, "sender_input_dim", static_cast<int>(ds.sender_dim));
  m.receiver_input_dim = get_or(j, "receiver_input_dim", static_cast<int>(ds.receiver_dim));
  c.optimizer.learning_rate = get_or(j, "learning_rate", c.optimizer.learning_rate);
  c.optimizer.rho = get_or(j, "rho", c.optimizer.rho);
  c.optimizer.eps = get_or(j, "eps", c.optimizer.eps);
  c.weights.lambda_stop = get_or(j, "lambda_stop", c.weights.lambda_stop);
  c.weights.lambda_msg = get_or(j, "lambda_msg", c.weights.lambda_msg);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.max_steps = get_or(j, "max_steps", c.max_steps);
  c.max_epochs = get_or(j, "max_epochs", c.max_epochs);
  c.max_updates = get_or(j, "max_updates", c.max_updates);
  c.patience = get_or(j, "patience", c.patience);
  c.seed = get_or(j, "seed", c.seed);
  c.ablation = training::ablation_from_string(get_or(j, "ablation", training::to_string(c.ablation)));
  c.threads = get_or(j, "threads", c.threads);
  c.k = get_or(j, "k", c.k);
  c.validate();
  return c;
}

json eval_metrics(const training::EvalResult& r, const std::string& split, int candidates) {
  double loss = 0.0;
  for (const auto& t : r.traces) loss += training::classification_loss(t);
  return {{"split", split},
          {"episodes", r.traces.size()},
          {"candidates", candidates},
          {"K", r.k},
          {"acc_at_k", r.acc_k},
          {"acc_at_1", r.acc_1},
          {"mean_length", r.mean_length},
          {"loss", loss / static_cast<double>(r.traces.size())}};
}

struct TrainRun {
  training::TrainResult result;
  training::TrainConfig config;
};

// Trains into `out`: checkpoint/, training_log.csv, val_episodes.jsonl,
// summary.json and resolved_config.json.
TrainRun run_training(json resolved, const data::Dataset& ds, const fs::path& out, bool verbose) {
  training::TrainConfig cfg = train_config(resolved, ds);
  cfg.diagnostic_dir = out / "diagnostics";
  fs::create_directories(out);
  resolved["sender_input_dim"] = cfg.model.sender_input_dim;
  resolved["receiver_input_dim"] = cfg.model.receiver_input_dim;
  write_resolved(out, resolved);

  const training::Model init = training::Model::create(cfg.model, cfg.seed);
  training::TrainResult result = training::train(cfg, ds, [&](const training::EpochRecord& e) {
    if (verbose) {
      std::cout << "epoch " << e.epoch << " updates " << e.updates << " loss " << analysis::fmt(e.train_loss)
                << " val_acc@K " << analysis::fmt(e.val_acc_k) << " val_acc@1 " << analysis::fmt(e.val_acc_1)
                << " mean_length " << analysis::fmt(e.mean_length) << std::endl;
    }
  });

  nn::save_checkpoint(training::model_checkpoint(result.model, cfg, result), out / "checkpoint");
  io::write_text(out / "training_log.csv", training::training_log_csv(result.log));
  const data::Split& val = ds.split(cfg.val_split);
  const training::EvalResult ev = training::evaluate(result.model, ds, val, cfg.max_steps, result.k, cfg.threads);
  analysis::write_episode_logs(out / "val_episodes.jsonl", ev.traces, val.name, ds.class_names);

  json summary;
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_acc_at_k"] = result.best_val_acc;
  summary["epochs"] = result.log.size();
  summary["updates"] = result.updates;
  summary["stop_reason"] = result.stop_reason;
  summary["seed"] = cfg.seed;
  summary["message_dim"] = cfg.model.message_dim;
  summary["ablation"] = training::to_string(cfg.ablation);
  summary["val"] = eval_metrics(ev, val.name, static_cast<int>(val.candidates.size()));
  summary["sender_checksum_initial"] = checksum(init.params, "sender.");
  summary["sender_checksum_final"] = checksum(result.final_model.params, "sender.");
  write_json(out / "summary.json", summary);
  return {std::move(result), std::move(cfg)};
}

int cmd_train(const std::string& config_path, const TrainOverrides& o, const std::string& out) {
  json resolved = resolve_train_json(config_path, o);
  const data::Dataset ds = load_data(get_or(resolved, "dataset", std::string()));
  const TrainRun run = run_training(resolved, ds, out, true);
  std::cout << "best epoch " << run.result.best_epoch << " val_acc@" << run.result.k << " "
            << analysis::fmt(run.result.best_val_acc) << " (" << run.result.stop_reason << ")\n";
  return kExitOk;
}

// ---- eval ----

int cmd_eval(const std::string& checkpoint, const std::string& data_dir, const std::string& split_name, int k,
             std::optional<int> max_steps, int threads, const std::string& out) {
  if (!fs::is_directory(checkpoint)) throw ConfigError("checkpoint directory not found: " + checkpoint);
  const data::Dataset ds = load_data(data_dir);
  const training::Model model = training::load_model(checkpoint);
  if (model.config.sender_input_dim != ds.sender_dim || model.config.receiver_input_dim != ds.receiver_dim) {
    throw DimensionError("checkpoint expects sender_dim " + std::to_string(model.config.sender_input_dim) +
                         " and receiver_dim " + std::to_string(model.config.receiver_input_dim) +
                         "; dataset has sender_dim " + std::to_string(ds.sender_dim) + " and receiver_dim " +
                         std::to_string(ds.receiver_dim));
  }
  int steps = max_steps.value_or(0);
  if (steps == 0) {
    const auto meta = nn::load_checkpoint(checkpoint).metadata;
    steps = meta.contains("train") ? meta["train"].value("max_steps", 10) : 10;
  }
  const data::Split& split = ds.split(split_name);
  const training::EvalResult r = training::evaluate(model, ds, split, steps, k, threads);
  fs::create_directories(out);
  analysis::write_episode_logs(fs::path(out) / "episodes.jsonl", r.traces, split.name, ds.class_names);
  const json metrics = eval_metrics(r, split.name, static_cast<int>(split.candidates.size()));
  write_json(fs::path(out) / "metrics.json", metrics);
  write_resolved(out, {{"checkpoint", checkpoint},
                       {"dataset", data_dir},
                       {"split", split_name},
                       {"k", r.k},
                       {"max_steps", steps},
                       {"threads", threads}});
  std::cout << split.name << ": acc@" << r.k << " " << analysis::fmt(r.acc_k) << " acc@1 "
            << analysis::fmt(r.acc_1) << " mean_length " << analysis::fmt(r.mean_length) << "\n";
  return kExitOk;
}

// ---- analyze ----

int cmd_analyze(const std::vector<std::string>& episode_files, const std::string& data_dir, int max_steps,
                const std::vector<std::string>& run_summaries, const std::string& out) {
  if (episode_files.empty() && run_summaries.empty()) {
    throw ConfigError("nothing to analyze: give --episodes and/or --runs");
  }
  if (run_summaries.size() == 1) throw ConfigError("--runs needs at least two summaries");
  fs::create_directories(out);
  if (!episode_files.empty()) {
    std::vector<analysis::EpisodeLog> logs;
    for (const auto& f : episode_files) {
      if (!fs::is_regular_file(f)) throw ConfigError("episode file not found: " + f);
      auto part = analysis::read_episode_logs(f);
      logs.insert(logs.end(), part.begin(), part.end());
    }
    std::vector<std::optional<double>> difficulty;
    if (!data_dir.empty()) difficulty = load_data(data_dir).difficulty;
    const auto report = analysis::build_report(logs, max_steps, data::default_k, difficulty);
    analysis::write_report(out, report, logs);
    for (const auto& s : report.splits) {
      std::cout << s.split << ": " << s.episodes << " episodes, acc@" << s.k << " " << analysis::fmt(s.acc_k)
                << " acc@1 " << analysis::fmt(s.acc_1) << " mean_length " << analysis::fmt(s.mean_length) << "\n";
    }
    if (report.correlation) {
      std::cout << "length vs difficulty: r " << analysis::fmt(report.correlation->r) << " p "
                << analysis::fmt(report.correlation->p) << " over " << report.correlation->n << " classes\n";
    } else if (!report.correlation_error.empty()) {
      std::cout << "length vs difficulty: " << report.correlation_error << "\n";
    }
  }
  if (!run_summaries.empty()) {
    std::vector<analysis::RunMetrics> runs;
    for (const auto& f : run_summaries) {
      const json j = read_config(f);
      if (!j.contains("val")) throw DataError(f + " is not a training summary");
      runs.push_back({j.value("seed", std::uint64_t{0}), j["val"].at("acc_at_k").get<double>(),
                      j["val"].at("acc_at_1").get<double>(), j["val"].at("loss").get<double>()});
    }
    const auto s = analysis::stability_report(runs);
    io::write_text(fs::path(out) / "stability.csv", analysis::stability_csv(s));
    std::cout << "stability over " << runs.size() << " runs: acc@K mean " << analysis::fmt(s.acc_k.mean)
              << " variance " << analysis::fmt(s.acc_k.variance) << "\n";
  }
  write_resolved(out, {{"episodes", episode_files},
                       {"dataset", data_dir},
                       {"max_steps", max_steps},
                       {"runs", run_summaries},
                       {"length_buckets", "exact final length"}});
  return kExitOk;
}

// ---- sweep ----

std::optional<analysis::SweepSplitResult> sweep_split(const training::Model& m, const data::Dataset& ds,
                                                      const std::string& name, int max_steps, int threads) {
  if (!ds.has_split(name) || ds.split(name).empty()) return std::nullopt;
  const auto r = training::evaluate(m, ds, ds.split(name), max_steps, 0, threads);
  return analysis::SweepSplitResult{r.k, r.acc_k, r.acc_1};
}

int cmd_sweep(const std::string& config_path, TrainOverrides o, const std::vector<int>& dims,
              const std::string& out) {
  if (dims.empty()) throw ConfigError("--dims must list at least one message dimension");
  if (std::set<int>(dims.begin(), dims.end()).size() != dims.size()) {
    throw ConfigError("--dims contains duplicate message dimensions");
  }
  for (int d : dims) {
    if (d < 1) throw ConfigError("message dimensions must be >= 1");
  }
  o.message_dim.reset();
  json base = resolve_train_json(config_path, o);
  const data::Dataset ds = load_data(get_or(base, "dataset", std::string()));
  train_config(base, ds);  // validates the shared settings before any run starts
  fs::create_directories(out);
  json resolved = base;
  resolved["dims"] = dims;
  write_resolved(out, resolved);

  std::vector<analysis::SweepRow> rows;
  bool all_ok = true;
  for (int d : dims) {
    analysis::SweepRow row;
    row.message_dim = d;
    json cfg = base;
    cfg["message_dim"] = d;
    try {
      const TrainRun run = run_training(cfg, ds, fs::path(out) / ("d" + std::to_string(d)), false);
      const auto& m = run.result.model;
      row.in_domain = sweep_split(m, ds, data::kTestSplit, run.config.max_steps, run.config.threads);
      row.out_of_domain = sweep_split(m, ds, data::kOutOfDomainSplit, run.config.max_steps, run.config.threads);
      row.transfer = sweep_split(m, ds, data::kTransferSplit, run.config.max_steps, run.config.threads);
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
      all_ok = false;
    }
    std::cout << "d=" << d << " " << (row.ok ? "ok" : "failed: " + row.error);
    if (row.in_domain) std::cout << " test acc@" << row.in_domain->k << " " << analysis::fmt(row.in_domain->acc_k);
    if (row.out_of_domain) {
      std::cout << " out_of_domain acc@" << row.out_of_domain->k << " " << analysis::fmt(row.out_of_domain->acc_k);
    }
    std::cout << std::endl;
    rows.push_back(std::move(row));
  }
  io::write_text(fs::path(out) / "sweep.csv", analysis::sweep_csv(rows));
  return all_ok ? kExitOk : kExitRuntime;
}

}  // namespace
}  // namespace refgame::cli

int main(int argc, char** argv) {
  using namespace refgame::cli;
  CLI::App app{"refgame: referential game with adaptive-length conversations"};
  app.set_version_flag("--version", REFGAME_VERSION);
  app.require_subcommand(1);

  std::string out, config, data_dir;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic attribute dataset");
  std::string spec;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--spec", spec, "Dataset spec JSON (defaults apply when omitted)");
  gen->add_option("--seed", gen_seed, "Override the spec seed");
  gen->add_option("--out", out, "Output dataset directory")->required();

  auto* imp = app.add_subcommand("import-data", "Import features, descriptions and word vectors");
  std::string features, descriptions, embeddings;
  bool word_sets = false;
  imp->add_option("--features", features, "name<TAB>values per line")->required();
  imp->add_option("--descriptions", descriptions, "name<TAB>tokens per line")->required();
  imp->add_option("--embeddings", embeddings, "word vectors, one per line")->required();
  imp->add_option("--config", config, "Split config JSON");
  imp->add_flag("--word-sets", word_sets, "Keep one column per unique word");
  imp->add_option("--out", out, "Output dataset directory")->required();

  TrainOverrides over;
  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Training config JSON");
    cmd->add_option("--data", over.dataset, "Dataset directory (overrides config 'dataset')");
    cmd->add_option("--seed", over.seed, "Random seed");
    cmd->add_option("--threads", over.threads, "Worker threads; results do not depend on it");
    cmd->add_option("--ablation", over.ablation, "both-agents-update or only-receiver-update");
    cmd->add_option("--max-updates", over.max_updates, "Stop after this many parameter updates");
    cmd->add_option("--max-epochs", over.max_epochs, "Epoch limit");
    cmd->add_option("--learning-rate", over.learning_rate, "RMSProp step size");
    cmd->add_option("--out", out, "Output directory")->required();
  };
  auto* train = app.add_subcommand("train", "Train a sender/receiver pair");
  add_train_flags(train);
  train->add_option("--message-dim", over.message_dim, "Message bits d");

  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint on one split");
  std::string checkpoint, split = refgame::data::kTestSplit;
  int k = 0, threads = 1;
  std::optional<int> max_steps;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--split", split, "Split name")->capture_default_str();
  eval->add_option("--k", k, "accuracy@K cutoff; 0 uses 10% of the candidates");
  eval->add_option("--max-steps", max_steps, "Exchange limit (default: the training value)");
  eval->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  eval->add_option("--out", out, "Output directory")->required();

  auto* analyze = app.add_subcommand("analyze", "Reports from episode logs and training summaries");
  std::vector<std::string> episode_files, runs;
  int analyze_steps = 10;
  analyze->add_option("--episodes", episode_files, "Episode JSON-lines files");
  analyze->add_option("--data", data_dir, "Dataset directory (difficulty scores)");
  analyze->add_option("--max-steps", analyze_steps, "Exchange limit used for the length bins")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  analyze->add_option("--runs", runs, "summary.json files of repeated runs (stability)");
  analyze->add_option("--out", out, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Train one model per message dimension");
  std::vector<int> dims;
  add_train_flags(sweep);
  sweep->add_option("--dims", dims, "Message dimensions, e.g. 2,8,32")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(spec, out, gen_seed);
    if (*imp) return cmd_import_data(features, descriptions, embeddings, config, word_sets, out);
    if (*train) return cmd_train(config, over, out);
    if (*eval) return cmd_eval(checkpoint, data_dir, split, k, max_steps, threads, out);
    if (*analyze) return cmd_analyze(episode_files, data_dir, analyze_steps, runs, out);
    if (*sweep) return cmd_sweep(config, over, dims, out);
  } catch (const refgame::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const refgame::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
