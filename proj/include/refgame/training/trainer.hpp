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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "refgame/core/binary_io.hpp"
#include "refgame/core/error.hpp"
#include "refgame/core/rng.hpp"
#include "refgame/data/dataset.hpp"
#include "refgame/data/splits.hpp"
#include "refgame/game/instance.hpp"
#include "refgame/game/play.hpp"
#include "refgame/nn/checkpoint.hpp"
#include "refgame/nn/rmsprop.hpp"
#include "refgame/training/losses.hpp"
#include "refgame/training/model.hpp"

namespace refgame::training {

enum class Ablation { kBothAgents, kOnlyReceiver };

inline std::string to_string(Ablation a) {
  return a == Ablation::kBothAgents ? "both-agents-update" : "only-receiver-update";
}

inline Ablation ablation_from_string(const std::string& s) {
  if (s == "both-agents-update") return Ablation::kBothAgents;
  if (s == "only-receiver-update") return Ablation::kOnlyReceiver;
  throw ConfigError("unknown ablation '" + s + "' (expected both-agents-update or only-receiver-update)");
}

struct TrainConfig {
  agents::ModelConfig model;
  nn::RmsPropConfig optimizer;
  LossWeights weights;
  int batch_size = 64;
  int max_steps = 10;
  int max_epochs = 500;
  long max_updates = 0;  // 0: no cap
  int patience = 50;     // epochs without improvement; 0 disables
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kBothAgents;
  int threads = 1;
  int k = 0;  // 0: default_k(|O_R| of the validation split)
  std::string train_split = data::kTrainSplit;
  std::string val_split = data::kValidSplit;
  // Where a non-finite loss dumps its minibatch; empty keeps it in the message only.
  std::filesystem::path diagnostic_dir;

  void validate() const {
    model.validate();
    optimizer.validate();
    weights.validate();
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (max_steps < 1) throw ConfigError("T_max must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (max_updates < 0) throw ConfigError("max_updates must be >= 0");
    if (patience < 0) throw ConfigError("patience must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (k < 0) throw ConfigError("K must be >= 0");
  }
};

struct EpochRecord {
  int epoch = 0;
  long updates = 0;
  double train_loss = 0.0;  // mean per-instance total
  double classification = 0.0;
  double reinforce = 0.0;
  double baseline = 0.0;
  double entropy_stop = 0.0;
  double entropy_msg = 0.0;
  double val_acc_k = 0.0;
  double val_acc_1 = 0.0;
  double mean_length = 0.0;  // validation, greedy
};

struct EvalResult {
  std::vector<EpisodeTrace> traces;
  int k = 1;
  double acc_k = 0.0;
  double acc_1 = 0.0;
  double mean_length = 0.0;
};

struct TrainResult {
  Model model;        // parameters of the best validation epoch
  Model final_model;  // parameters after the last update
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_acc = -1.0;
  long updates = 0;
  int k = 1;
  std::string stop_reason;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers; fn must only touch
// slot i of any shared output.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::min(threads, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline int resolve_k(int k, int num_candidates) {
  const int out = k > 0 ? k : data::default_k(num_candidates);
  if (out > num_candidates) {
    throw ConfigError("K = " + std::to_string(out) + " exceeds |O_R| = " + std::to_string(num_candidates));
  }
  return out;
}

// Greedy play over every (class, view) of a split, in entry order.
inline EvalResult evaluate(const Model& model, const data::Dataset& ds, const data::Split& split,
                           int max_steps, int k = 0, int threads = 1) {
  const auto instances = game::enumerate_instances(ds, split);
  if (instances.empty()) throw DataError("cannot evaluate on empty split '" + split.name + "'");
  EvalResult out;
  out.k = resolve_k(k, static_cast<int>(split.candidates.size()));
  game::GameConfig cfg;
  cfg.message_dim = model.config.message_dim;
  cfg.max_steps = max_steps;
  cfg.mode = game::PlayMode::kTestGreedy;
  cfg.k = out.k;
  out.traces.resize(instances.size());
  parallel_for(static_cast<int>(instances.size()), threads, [&](int i) {
    Tape tape(model.params);
    game::GreedyActions greedy;
    out.traces[static_cast<std::size_t>(i)] =
        game::play_episode(model.sender, model.receiver, model.params,
                           instances[static_cast<std::size_t>(i)], cfg, greedy, tape)
            .trace;
  });
  double hit_k = 0.0, hit_1 = 0.0, length = 0.0;
  for (const auto& t : out.traces) {
    const int rank = game::rank_of(t.final_belief(), t.target);
    hit_k += rank <= out.k ? 1.0 : 0.0;
    hit_1 += rank == 1 ? 1.0 : 0.0;
    length += t.length();
  }
  const double n = static_cast<double>(out.traces.size());
  out.acc_k = hit_k / n;
  out.acc_1 = hit_1 / n;
  out.mean_length = length / n;
  return out;
}

// One sampled episode with its gradient written into `grad` (which is
// zeroed first).
struct EpisodeResult {
  EpisodeTrace trace;
  LossBreakdown losses;
};

inline EpisodeResult episode_gradient(const Model& model, const game::GameInstance& inst,
                                      int max_steps, const LossWeights& w, std::uint64_t seed,
                                      nn::Gradients& grad) {
  Rng rng(seed);
  Tape tape(model.params);
  game::GameConfig cfg;
  cfg.message_dim = model.config.message_dim;
  cfg.max_steps = max_steps;
  game::SampledActions actions(rng);
  game::Episode ep = game::play_episode(model.sender, model.receiver, model.params, inst, cfg, actions, tape);
  const LossVars vars = build_losses(tape, model, inst, ep, w);
  EpisodeResult out{std::move(ep.trace), loss_breakdown(tape, vars)};
  grad.zero();
  if (std::isfinite(out.losses.objective())) tape.backward(vars.objective, grad);
  return out;
}

namespace detail {

inline std::string dump_minibatch(const std::filesystem::path& dir, int epoch, long update,
                                  const std::vector<game::GameInstance>& batch,
                                  const std::vector<EpisodeResult>& results) {
  nlohmann::json j;
  j["epoch"] = epoch;
  j["update"] = update;
  j["episodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& l = results[i].losses;
    j["episodes"].push_back({{"class_id", batch[i].class_id},
                             {"view_index", batch[i].view_index},
                             {"L_c", l.classification},
                             {"L_r", l.reinforce},
                             {"L_B", l.baseline},
                             {"H_stop", l.entropy_stop},
                             {"H_msg", l.entropy_msg},
                             {"total", l.total},
                             {"trace", game::trace_to_json(results[i].trace)}});
  }
  if (dir.empty()) return j.dump().substr(0, 2000);
  std::filesystem::create_directories(dir);
  const auto path = dir / ("nonfinite_update_" + std::to_string(update) + ".json");
  io::write_text(path, j.dump(2));
  return path.string();
}

}  // namespace detail

using EpochCallback = std::function<void(const EpochRecord&)>;

// Epochs of shuffled minibatches over every training (class, view) pair.
// Episodes of a minibatch are played in waves of `threads`; their gradients
// are reduced in episode order, so the result does not depend on `threads`.
inline TrainResult train(const TrainConfig& cfg, const data::Dataset& ds,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (!ds.has_split(cfg.train_split)) throw DataError("dataset has no '" + cfg.train_split + "' split");
  if (!ds.has_split(cfg.val_split)) throw DataError("dataset has no '" + cfg.val_split + "' split");
  if (cfg.model.sender_input_dim != ds.sender_dim || cfg.model.receiver_input_dim != ds.receiver_dim) {
    throw DimensionError("model expects view dims " + std::to_string(cfg.model.sender_input_dim) + "/" +
                         std::to_string(cfg.model.receiver_input_dim) + ", dataset has " +
                         std::to_string(ds.sender_dim) + "/" + std::to_string(ds.receiver_dim));
  }
  const data::Split& train_split = ds.split(cfg.train_split);
  const data::Split& val_split = ds.split(cfg.val_split);
  const auto instances = game::enumerate_instances(ds, train_split);
  if (instances.empty()) throw DataError("training split '" + cfg.train_split + "' is empty");

  TrainResult result;
  result.k = resolve_k(cfg.k, static_cast<int>(val_split.candidates.size()));
  Model model = Model::create(cfg.model, cfg.seed);
  if (cfg.ablation == Ablation::kOnlyReceiver) model.params.set_frozen_prefix("sender.", true);

  const int wave = cfg.threads;
  std::vector<nn::Gradients> buffers;
  for (int i = 0; i < wave; ++i) buffers.push_back(model.params.make_gradients());

  std::vector<std::size_t> order(instances.size());
  int since_best = 0;
  long updates = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    LossBreakdown sum;
    long episodes = 0;
    bool capped = false;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const int n = static_cast<int>(end - start);
      std::vector<game::GameInstance> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(instances[order[i]]);
      std::vector<EpisodeResult> results(static_cast<std::size_t>(n));

      model.params.zero_grad();
      bool finite = true;
      for (int w0 = 0; w0 < n; w0 += wave) {
        const int m = std::min(wave, n - w0);
        parallel_for(m, cfg.threads, [&](int j) {
          const int i = w0 + j;
          const std::uint64_t seed = derive_seed(
              cfg.seed, {2, static_cast<std::uint64_t>(updates), static_cast<std::uint64_t>(i)});
          results[static_cast<std::size_t>(i)] = episode_gradient(
              model, batch[static_cast<std::size_t>(i)], cfg.max_steps, cfg.weights, seed,
              buffers[static_cast<std::size_t>(j)]);
        });
        for (int j = 0; j < m; ++j) {
          finite = finite && std::isfinite(results[static_cast<std::size_t>(w0 + j)].losses.objective());
          if (finite) model.params.accumulate(buffers[static_cast<std::size_t>(j)]);
        }
      }
      if (!finite) {
        const std::string where = detail::dump_minibatch(cfg.diagnostic_dir, epoch, updates, batch, results);
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", update " +
                             std::to_string(updates) + "; minibatch dump: " + where);
      }
      for (auto& t : model.params.tensors()) t.grad *= 1.0 / n;
      nn::rmsprop_update(model.params, cfg.optimizer);
      ++updates;

      for (const auto& r : results) {
        sum.classification += r.losses.classification;
        sum.reinforce += r.losses.reinforce;
        sum.baseline += r.losses.baseline;
        sum.entropy_stop += r.losses.entropy_stop;
        sum.entropy_msg += r.losses.entropy_msg;
        sum.total += r.losses.total;
      }
      episodes += n;
      if (cfg.max_updates > 0 && updates >= cfg.max_updates) {
        capped = true;
        break;
      }
    }

    const EvalResult val = evaluate(model, ds, val_split, cfg.max_steps, result.k, cfg.threads);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.updates = updates;
    const double e = static_cast<double>(episodes);
    rec.train_loss = sum.total / e;
    rec.classification = sum.classification / e;
    rec.reinforce = sum.reinforce / e;
    rec.baseline = sum.baseline / e;
    rec.entropy_stop = sum.entropy_stop / e;
    rec.entropy_msg = sum.entropy_msg / e;
    rec.val_acc_k = val.acc_k;
    rec.val_acc_1 = val.acc_1;
    rec.mean_length = val.mean_length;
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val.acc_k > result.best_val_acc) {
      result.best_val_acc = val.acc_k;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (capped) {
      result.stop_reason = "max_updates";
      break;
    }
    if (cfg.patience > 0 && since_best >= cfg.patience) {
      result.stop_reason = "patience";
      break;
    }
    if (epoch == cfg.max_epochs) result.stop_reason = "max_epochs";
  }
  result.updates = updates;
  result.model.params.zero_grad();
  result.final_model = std::move(model);
  return result;
}

// ---- serialization ----

inline std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline std::string training_log_csv(const std::vector<EpochRecord>& log) {
  std::ostringstream os;
  os << "epoch,train_loss,L_c,L_r,L_B,H_stop,H_msg,val_acc@K,val_acc@1,mean_length\n";
  for (const auto& r : log) {
    os << r.epoch << ',' << format_real(r.train_loss) << ',' << format_real(r.classification) << ','
       << format_real(r.reinforce) << ',' << format_real(r.baseline) << ','
       << format_real(r.entropy_stop) << ',' << format_real(r.entropy_msg) << ','
       << format_real(r.val_acc_k) << ',' << format_real(r.val_acc_1) << ','
       << format_real(r.mean_length) << '\n';
  }
  return os.str();
}

inline nlohmann::json train_config_json(const TrainConfig& c) {
  nlohmann::json j = c.model;
  j["learning_rate"] = c.optimizer.learning_rate;
  j["rho"] = c.optimizer.rho;
  j["eps"] = c.optimizer.eps;
  j["lambda_stop"] = c.weights.lambda_stop;
  j["lambda_msg"] = c.weights.lambda_msg;
  j["batch_size"] = c.batch_size;
  j["max_steps"] = c.max_steps;
  j["max_epochs"] = c.max_epochs;
  j["max_updates"] = c.max_updates;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["ablation"] = to_string(c.ablation);
  j["threads"] = c.threads;
  j["k"] = c.k;
  return j;
}

inline nn::Checkpoint model_checkpoint(const Model& model, const TrainConfig& cfg,
                                       const TrainResult& result) {
  nlohmann::json meta;
  meta["model"] = model.config;
  meta["train"] = train_config_json(cfg);
  meta["best_epoch"] = result.best_epoch;
  meta["best_val_acc"] = result.best_val_acc;
  meta["updates"] = result.updates;
  meta["k"] = result.k;
  Rng rng(derive_seed(cfg.seed, {3, static_cast<std::uint64_t>(result.updates)}));
  return nn::make_checkpoint(model.params, cfg.optimizer, rng_state(rng), meta);
}

// Rebuilds a model from a checkpoint written by model_checkpoint.
inline Model load_model(const std::filesystem::path& dir) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(dir);
  if (!ckpt.metadata.contains("model")) throw DataError("checkpoint has no model configuration");
  Model m = Model::build(ckpt.metadata.at("model").get<agents::ModelConfig>());
  nn::restore(m.params, ckpt);
  return m;
}

}  // namespace refgame::training
