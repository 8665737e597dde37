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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. `acceptance <name>...` runs a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "refgame/refgame.hpp"
#include "test_support.hpp"

namespace refgame::acceptance {
namespace {

using nn::Vector;
using training::Model;
using training::TrainConfig;
using training::TrainResult;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) { return analysis::fmt(v); }

// ---- desk-scale synthetic task ----

data::Dataset synthetic_task(int hard_pairs, int held_out_classes, double noise = 0.5) {
  data::SyntheticSpec s;
  s.seed = 1;
  s.hard_pairs = hard_pairs;
  s.noise = noise;
  const int in_domain = s.n_classes - held_out_classes;
  return data::make_splits(data::generate_synthetic(s), testing::iota_ids(0, in_domain),
                           testing::iota_ids(in_domain, s.n_classes), {}, {70, 20, 10, 100});
}

TrainConfig desk_config(const data::Dataset& ds, int message_dim, int max_steps, std::uint64_t seed) {
  TrainConfig c;
  auto& m = c.model;
  m.message_dim = message_dim;
  m.sender_input_dim = static_cast<int>(ds.sender_dim);
  m.receiver_input_dim = static_cast<int>(ds.receiver_dim);
  m.sender_embed_dim = 64;
  m.sender_hidden = 64;
  m.sender_attention_hidden = 64;
  m.memory_dim = 64;
  m.receiver_attention_hidden = 32;
  m.baseline_hidden = 64;
  c.optimizer.learning_rate = 1e-3;
  c.batch_size = 64;
  c.max_steps = max_steps;
  c.max_updates = 2000;
  c.max_epochs = 100000;
  c.patience = 0;
  c.seed = seed;
  return c;
}

double max_val_acc1(const TrainResult& r) {
  double best = 0.0;
  for (const auto& e : r.log) best = std::max(best, e.val_acc_1);
  return best;
}

// ---- gradient correctness ----

Outcome gradient_check() {
  using agents::ReceiverKind;
  using agents::SenderKind;
  std::ostringstream detail;
  bool pass = true;
  double worst = 0.0;
  for (SenderKind sk : {SenderKind::kPooled, SenderKind::kAttention}) {
    for (ReceiverKind rk : {ReceiverKind::kPooled, ReceiverKind::kAttention}) {
      const bool regions = sk == SenderKind::kAttention;
      const bool words = rk == ReceiverKind::kAttention;
      const data::Dataset ds = testing::tiny_dataset(3, 4, regions ? 3 : 1, words);
      agents::ModelConfig c = testing::tiny_config(ds, 3, 4);
      c.sender = sk;
      c.receiver = rk;
      const Model model = Model::create(c, 17);
      training::LossWeights w;
      w.lambda_stop = 0.3;
      w.lambda_msg = 0.2;
      game::GameConfig gc;
      gc.message_dim = 3;
      gc.max_steps = 4;
      // An episode with at least one receiver reply exercises every head.
      Rng rng(5);
      const auto& train = ds.split(data::kTrainSplit);
      game::GameInstance inst;
      game::Episode ep;
      for (int tries = 0; tries < 100; ++tries) {
        inst = game::sample_instance(ds, train, rng);
        nn::Tape tape(model.params);
        ep = game::play_episode(model.sender, model.receiver, model.params, inst, gc, rng, tape);
        if (ep.trace.length() >= 2) break;
      }
      nn::GradCheckOptions opt;
      opt.tolerance = 1e-4;
      const auto check = testing::check_episode_gradients(model, inst, ep.trace, w, opt);
      const double err = std::max(check.agents.max_rel_error, check.baselines.max_rel_error);
      worst = std::max(worst, err);
      pass = pass && check.passed() && inst.candidates.size() == 3;
      detail << agents::to_string(sk) << "/" << agents::to_string(rk) << " T=" << ep.trace.length() << " max_rel "
             << fmt(err) << "; ";
    }
  }
  detail << "worst " << fmt(worst) << " (tol 1e-4)";
  return {pass, detail.str()};
}

// ---- REINFORCE unbiasedness ----

// Fixed choices for one enumerated outcome.
class ScriptedActions final : public game::ActionSource {
 public:
  ScriptedActions(int opening, int sender, bool stop) : opening_(opening), sender_(sender), stop_(stop) {}
  game::BinaryMessage initial_message(const Vector&) override { return bit(opening_); }
  game::BinaryMessage sender_message(int, const Vector&) override { return bit(sender_); }
  bool stop(int, double) override { return stop_; }
  game::BinaryMessage receiver_message(int, const Vector&) override { throw UsageError("no reply at T_max = 1"); }

 private:
  static game::BinaryMessage bit(int b) { return game::BinaryMessage(std::vector<std::uint8_t>{std::uint8_t(b)}); }
  int opening_, sender_;
  bool stop_;
};

// E[R] by enumerating every (opening, sender message, stop) outcome of the
// d = 1, T_max = 1 game. Forward values only.
double expected_reward(const Model& m, const game::GameInstance& inst, const game::GameConfig& gc) {
  double total = 0.0;
  for (int opening : {0, 1}) {
    for (int msg : {0, 1}) {
      for (bool stop : {false, true}) {
        ScriptedActions actions(opening, msg, stop);
        nn::Tape tape(m.params);
        const auto ep = game::play_episode(m.sender, m.receiver, m.params, inst, gc, actions, tape);
        const auto& tr = ep.trace;
        const double p0 = tr.initial_message_probs(0);
        const double ps = tr.steps[0].sender_probs(0);
        const double pst = tr.steps[0].stop_prob;
        const double prob = (opening ? p0 : 1.0 - p0) * (msg ? ps : 1.0 - ps) * (stop ? pst : 1.0 - pst);
        total += prob * tr.reward;
      }
    }
  }
  return total;
}

Outcome reinforce_unbiased() {
  testing::OracleGame g = testing::oracle_two_object_game();
  Model& m = g.model;
  // Soften the solved game so that every outcome has visible probability and
  // the reward depends on the sampled sender bit.
  Rng init(99);
  std::normal_distribution<double> gauss(0.0, 0.3);
  for (auto& t : m.params.tensors()) {
    for (Eigen::Index k = 0; k < t.values.size(); ++k) t.values(k) += gauss(init);
  }
  auto set = [&](const char* name, double v) { m.params[m.params.find(name)].values.setConstant(v); };
  set("sender.out.weight", 1.5);
  set("receiver.gru.b_z", 1.0);
  set("receiver.stop.bias", 0.3);
  const auto& split = g.dataset.split(data::kTrainSplit);
  const game::GameInstance inst = game::make_instance(g.dataset, split, 1, 0);
  game::GameConfig gc;
  gc.message_dim = 1;
  gc.max_steps = 1;

  // Exact gradient: central differences of the enumerated expectation.
  nn::ParamSet& params = m.params;
  std::vector<std::vector<double>> exact(params.size());
  constexpr double kStep = 1e-6;
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    auto& t = params.tensors()[ti];
    for (Eigen::Index k = 0; k < t.values.size(); ++k) {
      const double orig = t.values(k);
      t.values(k) = orig + kStep;
      const double up = expected_reward(m, inst, gc);
      t.values(k) = orig - kStep;
      const double down = expected_reward(m, inst, gc);
      t.values(k) = orig;
      exact[ti].push_back((up - down) / (2.0 * kStep));
    }
  }

  // Monte Carlo mean of the policy-gradient estimator, -grad L_r.
  constexpr int kEpisodes = 100000;
  training::LossWeights w;
  w.lambda_stop = 0.0;
  w.lambda_msg = 0.0;
  std::vector<Eigen::ArrayXd> sum(params.size()), sq(params.size());
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    sum[ti] = Eigen::ArrayXd::Zero(params.tensors()[ti].values.size());
    sq[ti] = sum[ti];
  }
  Rng rng(2024);
  for (int i = 0; i < kEpisodes; ++i) {
    nn::Tape tape(params);
    game::SampledActions actions(rng);
    const auto ep = game::play_episode(m.sender, m.receiver, params, inst, gc, actions, tape);
    const auto vars = training::build_losses(tape, m, inst, ep, w);
    nn::Gradients grad = params.make_gradients();
    tape.backward(vars.reinforce, grad);
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
      const Eigen::ArrayXd g = -grad.tensors[ti].reshaped().array();
      sum[ti] += g;
      sq[ti] += g.square();
    }
  }
  int coords = 0, outside = 0, nonzero = 0;
  double worst_z = 0.0;
  std::string worst_name;
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    const auto& name = params.tensors()[ti].name;
    if (name.starts_with("baseline.")) continue;  // constants inside the advantage
    for (Eigen::Index k = 0; k < sum[ti].size(); ++k) {
      const double mean = sum[ti](k) / kEpisodes;
      const double var = std::max(0.0, sq[ti](k) / kEpisodes - mean * mean);
      const double se = std::sqrt(var / (kEpisodes - 1));
      const double diff = std::abs(mean - exact[ti][static_cast<std::size_t>(k)]);
      ++coords;
      if (std::abs(exact[ti][static_cast<std::size_t>(k)]) > 1e-6) ++nonzero;
      // Coordinates the episode never touches have zero variance; they must
      // match to finite-difference accuracy.
      const double z = se > 0.0 ? diff / se : (diff <= 1e-7 ? 0.0 : INFINITY);
      if (z > 3.0) ++outside;
      if (z > worst_z) {
        worst_z = z;
        worst_name = name;
      }
    }
  }
  return {outside == 0 && nonzero > 0,
          std::to_string(kEpisodes) + " episodes, " + std::to_string(coords) + " coordinates (" +
              std::to_string(nonzero) + " with nonzero exact gradient), " + std::to_string(outside) +
              " beyond 3 SE, max |z| " + fmt(worst_z) + " (" + worst_name + ")"};
}

// ---- trained-model criteria ----

struct Runs {
  data::Dataset task = synthetic_task(0, 0);
  std::map<std::uint64_t, TrainResult> bau;  // by seed, d = 8, T_max = 4

  const TrainResult& both_agents(std::uint64_t seed) {
    auto it = bau.find(seed);
    if (it == bau.end()) it = bau.emplace(seed, training::train(desk_config(task, 8, 4, seed), task)).first;
    return it->second;
  }
};

constexpr std::uint64_t kTaskSeed = 3;

Outcome learnability(Runs& runs) {
  const TrainResult& r = runs.both_agents(kTaskSeed);
  long first = -1;
  for (const auto& e : r.log) {
    if (e.val_acc_1 >= 0.95) {
      first = e.updates;
      break;
    }
  }
  return {first > 0 && first <= 2000, "best val acc@1 " + fmt(max_val_acc1(r)) + ", first >= 0.95 at update " +
                                          (first > 0 ? std::to_string(first) : "never") + " of " +
                                          std::to_string(r.updates)};
}

Outcome ablation(Runs& runs) {
  const TrainResult& bau = runs.both_agents(kTaskSeed);
  TrainConfig cfg = desk_config(runs.task, 8, 4, kTaskSeed);
  cfg.ablation = training::Ablation::kOnlyReceiver;
  const TrainResult oru = training::train(cfg, runs.task);
  const auto& test = runs.task.split(data::kTestSplit);
  const double a_bau = training::evaluate(bau.final_model, runs.task, test, 4).acc_1;
  const double a_oru = training::evaluate(oru.final_model, runs.task, test, 4).acc_1;
  return {a_bau - a_oru >= 0.10, "final test acc@1 BAU " + fmt(a_bau) + ", ORU " + fmt(a_oru) + ", gap " +
                                     fmt(a_bau - a_oru) + " (need >= 0.10)"};
}

// Adaptive-length setting. Two-bit messages cannot separate a hard pair in
// one exchange, and view noise keeps accuracy below 1 so that the stop
// decision still carries reward signal.
constexpr int kAdaptiveDim = 2;
constexpr int kAdaptiveSteps = 4;
constexpr double kAdaptiveNoise = 1.0;

Outcome adaptive_length() {
  const data::Dataset ds = synthetic_task(2, 0, kAdaptiveNoise);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  int agree = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const TrainResult r = training::train(desk_config(ds, kAdaptiveDim, kAdaptiveSteps, seed), ds);
    const auto ev = training::evaluate(r.model, ds, ds.split(data::kValidSplit), kAdaptiveSteps);
    std::vector<analysis::EpisodeLog> logs;
    for (const auto& t : ev.traces) logs.push_back(analysis::episode_log(t));
    std::vector<double> hard, easy;
    for (const auto& c : analysis::class_lengths(logs)) {
      (ds.class_names[c.class_id].starts_with("hard") ? hard : easy).push_back(c.mean_length);
    }
    detail << "seed " << seed << ": ";
    try {
      const double r_len = analysis::length_difficulty_report(logs, ds.difficulty).correlation.r;
      if (r_len < -0.3 && mean(hard) > mean(easy)) ++agree;
      detail << "r " << fmt(r_len);
    } catch (const UndefinedStatisticError& e) {
      detail << e.what();
    }
    detail << ", length hard " << fmt(mean(hard)) << " easy " << fmt(mean(easy)) << ", val acc@1 " << fmt(ev.acc_1)
           << "; ";
  }
  detail << agree << "/3 seeds with r < -0.3 and hard > easy";
  return {agree >= 2, detail.str()};
}

Outcome entropy_mechanics(Runs& runs) {
  const data::Dataset& ds = runs.task;
  const auto& val = ds.split(data::kValidSplit);
  constexpr int kDim = 8;
  const double cap = kDim * std::log(2.0);
  std::vector<double> means;
  bool bounded = true;
  std::ostringstream detail;
  for (double lambda : {0.0, 0.01, 0.1}) {
    TrainConfig cfg = desk_config(ds, kDim, 4, kTaskSeed);
    cfg.max_updates = 200;
    cfg.weights.lambda_msg = lambda;
    const TrainResult r = training::train(cfg, ds);
    // Sampled play on every validation instance, one message at a time.
    Rng rng(derive_seed(kTaskSeed, {7}));
    game::GameConfig gc;
    gc.message_dim = kDim;
    gc.max_steps = 4;
    double total = 0.0;
    long messages = 0;
    auto add = [&](const Vector& p) {
      const double h = analysis::message_entropy(p);
      bounded = bounded && h >= 0.0 && h <= cap;
      total += h;
      ++messages;
    };
    for (const auto& inst : game::enumerate_instances(ds, val)) {
      nn::Tape tape(r.final_model.params);
      const auto ep = game::play_episode(r.final_model.sender, r.final_model.receiver, r.final_model.params, inst,
                                         gc, rng, tape);
      add(ep.trace.initial_message_probs);
      for (const auto& s : ep.trace.steps) {
        add(s.sender_probs);
        if (s.receiver_probs.size() > 0 && s.receiver_message) add(s.receiver_probs);
      }
    }
    means.push_back(total / static_cast<double>(messages));
    detail << "lambda_m " << fmt(lambda) << ": " << fmt(means.back()) << "; ";
  }
  const bool increasing = means[0] < means[1] && means[1] < means[2];
  detail << "bound d ln2 = " << fmt(cap);
  return {increasing && bounded, detail.str()};
}

Outcome bandwidth_sweep() {
  const data::Dataset ds = synthetic_task(0, 2);
  const auto& held = ds.split(data::kOutOfDomainSplit);
  int agree = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    std::map<int, double> acc;
    for (int d : {2, 8, 32}) {
      const TrainResult r = training::train(desk_config(ds, d, 4, seed), ds);
      acc[d] = training::evaluate(r.model, ds, held, 4).acc_k;
    }
    if (acc[32] >= acc[2]) ++agree;
    detail << "seed " << seed << " held-out acc@K d=2/8/32: " << fmt(acc[2]) << "/" << fmt(acc[8]) << "/"
           << fmt(acc[32]) << "; ";
  }
  detail << agree << "/3 seeds with d=32 >= d=2 (K=" << data::default_k(static_cast<int>(held.candidates.size()))
         << ")";
  return {agree >= 2, detail.str()};
}

Outcome stability(Runs& runs) {
  std::vector<analysis::RunMetrics> metrics;
  bool all = true;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const TrainResult& r = runs.both_agents(seed);
    const auto ev = training::evaluate(r.model, runs.task, runs.task.split(data::kTestSplit), 4);
    metrics.push_back({seed, ev.acc_k, ev.acc_1, 0.0});
    all = all && ev.acc_1 >= 0.90;
    detail << fmt(ev.acc_1) << (seed < 6 ? "," : "");
  }
  const auto s = analysis::stability_report(metrics);
  return {all, "test acc@1 per seed " + detail.str() + "; mean " + fmt(s.acc_1.mean) + ", variance " +
                   fmt(s.acc_1.variance) + " (need all >= 0.90)"};
}

Outcome determinism(Runs& runs) {
  TrainConfig cfg = desk_config(runs.task, 8, 4, 11);
  cfg.max_updates = 60;
  std::set<std::string> logs;
  std::string first;
  for (int threads : {1, 2, 4, 1}) {
    cfg.threads = threads;
    const std::string csv = training::training_log_csv(training::train(cfg, runs.task).log);
    if (first.empty()) first = csv;
    logs.insert(csv);
  }
  return {logs.size() == 1, "threads 1,2,4,1 -> " + std::to_string(logs.size()) + " distinct log(s), " +
                                std::to_string(std::count(first.begin(), first.end(), '\n') - 1) + " epochs"};
}

}  // namespace
}  // namespace refgame::acceptance

int main(int argc, char** argv) {
  using namespace refgame::acceptance;
  Runs runs;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient_correctness", [] { return gradient_check(); }},
      {"reinforce_unbiased", [] { return reinforce_unbiased(); }},
      {"learnability", [&] { return learnability(runs); }},
      {"ablation_oru", [&] { return ablation(runs); }},
      {"adaptive_length", [] { return adaptive_length(); }},
      {"entropy_mechanics", [&] { return entropy_mechanics(runs); }},
      {"bandwidth_sweep", [] { return bandwidth_sweep(); }},
      {"stability", [&] { return stability(runs); }},
      {"determinism", [&] { return determinism(runs); }},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
