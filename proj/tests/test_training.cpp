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

#include <cmath>
#include <filesystem>
#include <limits>

#include <gtest/gtest.h>

#include "refgame/nn/checkpoint.hpp"
#include "refgame/training/trainer.hpp"
#include "test_support.hpp"

namespace refgame::training {
namespace {

using game::BinaryMessage;
using game::EpisodeTrace;
using game::StepRecord;
using nn::Vector;
using refgame::testing::check_episode_gradients;
using refgame::testing::scratch_dir;
using refgame::testing::tiny_config;
using refgame::testing::tiny_dataset;

// Frozen by tests/oracles/derive_values.py.
constexpr double kMinusLog07 = 0.35667494393873237891;
constexpr double k32Ln2 = 22.180709777918249901;

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// A hand-built trace of `length` steps over two candidates, target 0.
EpisodeTrace hand_trace(int length, double target_prob, int reward, bool forced) {
  EpisodeTrace t;
  t.num_candidates = 2;
  t.target = 0;
  t.reward = reward;
  t.forced_stop = forced;
  t.initial_message = BinaryMessage(std::vector<std::uint8_t>{1});
  t.initial_message_probs = vec({0.5});
  for (int i = 0; i < length; ++i) {
    StepRecord s;
    s.sender_message = BinaryMessage(std::vector<std::uint8_t>{0});
    s.sender_probs = vec({0.5});
    s.stop_prob = 0.5;
    s.stop = i + 1 == length && !forced;
    s.belief = vec({target_prob, 1.0 - target_prob});
    s.memory = vec({0.0});
    if (i + 1 < length) {
      s.receiver_message = BinaryMessage(std::vector<std::uint8_t>{1});
      s.receiver_probs = vec({0.5});
    }
    t.steps.push_back(s);
  }
  return t;
}

BaselineValues constant_baselines(int length, double v) {
  BaselineValues b;
  b.initial = v;
  b.sender.assign(static_cast<std::size_t>(length), v);
  b.receiver.assign(static_cast<std::size_t>(length), v);
  return b;
}

TrainConfig tiny_train_config(const data::Dataset& ds) {
  TrainConfig c;
  c.model = tiny_config(ds);
  c.batch_size = 8;
  c.max_steps = 3;
  c.max_epochs = 3;
  c.seed = 17;
  return c;
}

TEST(Losses, ClassificationIsNegativeLogOfTargetBelief) {
  EXPECT_NEAR(classification_loss(hand_trace(2, 0.7, 1, false)), kMinusLog07, 1e-15);
  // Probabilities are clamped to [1e-7, 1 - 1e-7].
  EXPECT_NEAR(classification_loss(hand_trace(1, 1.0, 1, false)), 1e-7, 1e-12);
  EXPECT_TRUE(std::isfinite(classification_loss(hand_trace(1, 0.0, 0, false))));
}

TEST(Losses, FairCoinMessageEntropyIsDLn2) {
  EXPECT_NEAR(sum_entropy(Vector::Constant(32, 0.5)), k32Ln2, 1e-12);
  EXPECT_NEAR(sum_entropy(Vector::Zero(4)), 0.0, 1e-4);
}

TEST(Losses, BaselineLossCountsTwoTermsPerStep) {
  const EpisodeTrace t = hand_trace(3, 0.6, 1, false);
  EXPECT_DOUBLE_EQ(baseline_loss(t, constant_baselines(3, 0.0)), 6.0);
  EXPECT_DOUBLE_EQ(baseline_loss(t, constant_baselines(3, 1.0)), 0.0);
  EXPECT_THROW(baseline_loss(t, constant_baselines(2, 0.0)), DimensionError);
}

TEST(Losses, PerfectBaselinesZeroThePolicyGradientTerm) {
  for (bool forced : {false, true}) {
    const EpisodeTrace t = hand_trace(3, 0.6, 1, forced);
    EXPECT_EQ(reinforce_loss(t, constant_baselines(3, 1.0)), 0.0);
  }
}

TEST(Losses, ForcedStopContributesNoStopTerm) {
  const EpisodeTrace chosen = hand_trace(2, 0.6, 1, false);
  const EpisodeTrace forced = hand_trace(2, 0.6, 1, true);
  EXPECT_NEAR(stop_log_prob(chosen, 2), std::log(0.5), 1e-15);
  EXPECT_EQ(stop_log_prob(forced, 2), 0.0);
  EXPECT_NEAR(stop_log_prob(forced, 1), std::log(0.5), 1e-15);
  // With zero baselines every logged decision has log-probability ln 0.5;
  // the forced one is skipped.
  const BaselineValues zero = constant_baselines(2, 0.0);
  EXPECT_NEAR(reinforce_loss(chosen, zero), -6.0 * std::log(0.5), 1e-12);
  EXPECT_NEAR(reinforce_loss(forced, zero), -5.0 * std::log(0.5), 1e-12);
}

TEST(Losses, EntropyTermsCoverEveryStep) {
  const EntropyTerms h = entropy_terms(hand_trace(3, 0.6, 1, false));
  EXPECT_NEAR(h.stop, 3.0 * std::log(2.0), 1e-12);
  // Three sender messages and two receiver replies of one bit each.
  EXPECT_NEAR(h.msg, 5.0 * std::log(2.0), 1e-12);
}

TEST(Losses, WeightsValidated) {
  LossWeights w;
  w.lambda_msg = -0.1;
  EXPECT_THROW(w.validate(), ConfigError);
}

class EpisodeLossTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ds_ = tiny_dataset(3, 6, 1, false);
    model_ = Model::create(tiny_config(ds_), 3);
  }
  game::Episode sample(const game::GameInstance& inst, Tape& tape, std::uint64_t seed, int max_steps = 4) {
    Rng rng(seed);
    game::GameConfig cfg;
    cfg.message_dim = model_.config.message_dim;
    cfg.max_steps = max_steps;
    return game::play_episode(model_.sender, model_.receiver, model_.params, inst, cfg, rng, tape);
  }
  data::Dataset ds_;
  Model model_;
};

TEST_F(EpisodeLossTest, TapeLossesMatchValueLevelLosses) {
  LossWeights w;
  w.lambda_stop = 0.3;
  w.lambda_msg = 0.2;
  Rng pick(9);
  for (int i = 0; i < 40; ++i) {
    const auto inst = game::sample_instance(ds_, ds_.split(data::kTrainSplit), pick);
    Tape tape(model_.params);
    const game::Episode ep = sample(inst, tape, 100 + i);
    const LossVars vars = build_losses(tape, model_, inst, ep, w);
    const LossBreakdown a = loss_breakdown(tape, vars);
    const BaselineValues b = baseline_values(model_, inst, ep.trace);
    EXPECT_EQ(b.initial, tape.scalar(vars.baselines.initial));
    const LossBreakdown v = loss_breakdown(ep.trace, b, w);
    EXPECT_NEAR(a.classification, v.classification, 1e-12);
    EXPECT_NEAR(a.reinforce, v.reinforce, 1e-12);
    EXPECT_NEAR(a.baseline, v.baseline, 1e-12);
    EXPECT_NEAR(a.entropy_stop, v.entropy_stop, 1e-12);
    EXPECT_NEAR(a.entropy_msg, v.entropy_msg, 1e-12);
    EXPECT_NEAR(a.total, v.total, 1e-12);
    EXPECT_NEAR(tape.scalar(vars.objective), v.objective(), 1e-12);
  }
}

TEST_F(EpisodeLossTest, GradientsMatchFiniteDifferences) {
  LossWeights w;
  w.lambda_stop = 0.3;
  w.lambda_msg = 0.2;
  nn::GradCheckOptions opt;
  Rng pick(10);
  for (int i = 0; i < 3; ++i) {
    const auto inst = game::sample_instance(ds_, ds_.split(data::kTrainSplit), pick);
    Tape tape(model_.params);
    const game::Episode ep = sample(inst, tape, 200 + i);
    const auto check = check_episode_gradients(model_, inst, ep.trace, w, opt);
    EXPECT_TRUE(check.agents.passed) << check.agents.summary();
    EXPECT_TRUE(check.baselines.passed) << check.baselines.summary();
  }
}

TEST_F(EpisodeLossTest, ZeroAdvantageLeavesSenderUntouched) {
  // Identical descriptions make the belief (0.5, 0.5); the target is the first
  // candidate, so every episode earns reward 1. Baselines pinned at 1 remove
  // every policy-gradient term, and without entropy bonuses the sender then
  // has no gradient at all.
  data::Dataset ds = ds_;
  ds.receiver_views[1] = ds.receiver_views[0];
  const data::Split pair{"pair", {{0, 0, 4}}, {0, 1}};
  for (const char* name : {"baseline.sender.out", "baseline.receiver.out"}) {
    model_.params[model_.params.find(std::string(name) + ".weight")].values.setZero();
    model_.params[model_.params.find(std::string(name) + ".bias")].values.setConstant(1.0);
  }
  LossWeights w;
  w.lambda_stop = 0.0;
  w.lambda_msg = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto inst = game::make_instance(ds, pair, 0, i % 4);
    nn::Gradients g = model_.params.make_gradients();
    const EpisodeResult r = episode_gradient(model_, inst, 4, w, 300 + i, g);
    ASSERT_EQ(r.trace.reward, 1);
    EXPECT_EQ(r.losses.reinforce, 0.0);
    for (std::size_t k = 0; k < model_.params.size(); ++k) {
      const auto& t = model_.params.tensors()[k];
      if (t.name.starts_with("sender.")) EXPECT_LE(g.tensors[k].cwiseAbs().maxCoeff(), 1e-10) << t.name;
    }
  }
}

TEST_F(EpisodeLossTest, BaselineRegressionDecreasesMonotonically) {
  const auto inst = game::make_instance(ds_, ds_.split(data::kTrainSplit), 1, 0);
  Tape tape(model_.params);
  const EpisodeTrace trace = sample(inst, tape, 7).trace;
  nn::RmsPropConfig opt;
  opt.learning_rate = 1e-3;
  double prev = baseline_loss(trace, baseline_values(model_, inst, trace));
  ASSERT_GT(prev, 1e-3);
  for (int step = 0; step < 100; ++step) {
    Tape t(model_.params);
    game::ReplayActions replay(trace);
    game::GameConfig cfg;
    cfg.message_dim = model_.config.message_dim;
    cfg.max_steps = trace.length();
    const game::Episode ep = game::play_episode(model_.sender, model_.receiver, model_.params, inst, cfg, replay, t);
    const LossVars v = build_losses(t, model_, inst, ep, {});
    model_.params.zero_grad();
    t.backward(v.baseline, model_.params);
    for (const auto& p : model_.params.tensors()) {
      if (!p.name.starts_with("baseline.")) ASSERT_EQ(p.grad.cwiseAbs().maxCoeff(), 0.0) << p.name;
    }
    nn::rmsprop_update(model_.params, opt);
    const double now = baseline_loss(trace, baseline_values(model_, inst, trace));
    EXPECT_LT(now, prev) << "step " << step;
    prev = now;
  }
}

TEST(Trainer, ConfigValidation) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.threads = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(ablation_from_string("only-receiver-update"), Ablation::kOnlyReceiver);
  EXPECT_EQ(to_string(Ablation::kBothAgents), "both-agents-update");
  EXPECT_THROW(ablation_from_string("sender-only"), ConfigError);
}

TEST(Trainer, RejectsDimensionMismatch) {
  const data::Dataset ds = tiny_dataset();
  TrainConfig c = tiny_train_config(ds);
  c.model.sender_input_dim += 1;
  EXPECT_THROW(train(c, ds), DimensionError);
}

TEST(Trainer, RejectsKAboveCandidateCount) {
  const data::Dataset ds = tiny_dataset(4);
  TrainConfig c = tiny_train_config(ds);
  c.k = 5;
  EXPECT_THROW(train(c, ds), ConfigError);
}

TEST(Trainer, EarlyStoppingKeepsEarliestBestEpoch) {
  const data::Dataset ds = tiny_dataset(4, 2);
  TrainConfig c = tiny_train_config(ds);
  c.max_epochs = 8;
  c.patience = 0;
  c.k = 1;
  const TrainResult r = train(c, ds);
  ASSERT_EQ(r.log.size(), 8u);
  EXPECT_EQ(r.stop_reason, "max_epochs");
  double best = -1.0;
  int best_epoch = 0;
  for (const auto& e : r.log) {
    if (e.val_acc_k > best) {
      best = e.val_acc_k;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_EQ(r.best_val_acc, best);
  const EvalResult again = evaluate(r.model, ds, ds.split(data::kValidSplit), c.max_steps, 1);
  EXPECT_EQ(again.acc_k, best);
  const EvalResult last = evaluate(r.final_model, ds, ds.split(data::kValidSplit), c.max_steps, 1);
  EXPECT_EQ(last.acc_k, r.log.back().val_acc_k);
}

TEST(Trainer, PatienceAndUpdateCapStopEarly) {
  const data::Dataset ds = tiny_dataset(4, 2);
  TrainConfig c = tiny_train_config(ds);
  c.max_epochs = 50;
  c.patience = 2;
  const TrainResult r = train(c, ds);
  EXPECT_EQ(r.stop_reason, "patience");
  EXPECT_EQ(r.log.size(), static_cast<std::size_t>(r.best_epoch + 2));

  c.patience = 0;
  c.max_updates = 4;  // 24 training pairs in batches of 8: 3 per epoch
  const TrainResult capped = train(c, ds);
  EXPECT_EQ(capped.stop_reason, "max_updates");
  EXPECT_EQ(capped.updates, 4);
  EXPECT_EQ(capped.log.size(), 2u);
}

TEST(Trainer, ResultIndependentOfThreadCount) {
  const data::Dataset ds = tiny_dataset(4, 5);
  TrainConfig c = tiny_train_config(ds);
  c.threads = 1;
  const TrainResult one = train(c, ds);
  c.threads = 3;
  const TrainResult three = train(c, ds);
  EXPECT_EQ(training_log_csv(one.log), training_log_csv(three.log));
  for (std::size_t i = 0; i < one.final_model.params.size(); ++i) {
    EXPECT_EQ(one.final_model.params.tensors()[i].values, three.final_model.params.tensors()[i].values)
        << one.final_model.params.tensors()[i].name;
  }
}

TEST(Trainer, SameSeedSameRunDifferentSeedDifferentRun) {
  const data::Dataset ds = tiny_dataset(4, 5);
  TrainConfig c = tiny_train_config(ds);
  c.max_epochs = 1;
  const auto a = train(c, ds), b = train(c, ds);
  EXPECT_EQ(training_log_csv(a.log), training_log_csv(b.log));
  c.seed += 1;
  EXPECT_NE(training_log_csv(a.log), training_log_csv(train(c, ds).log));
}

TEST(Trainer, OnlyReceiverAblationFreezesSender) {
  const data::Dataset ds = tiny_dataset(4, 5);
  TrainConfig c = tiny_train_config(ds);
  c.ablation = Ablation::kOnlyReceiver;
  const TrainResult r = train(c, ds);
  const Model init = Model::create(c.model, c.seed);
  bool receiver_moved = false;
  for (std::size_t i = 0; i < init.params.size(); ++i) {
    const auto& before = init.params.tensors()[i];
    const auto& after = r.final_model.params.tensors()[i];
    if (before.name.starts_with("sender.")) {
      EXPECT_EQ(before.values, after.values) << before.name;
    } else if (before.name.starts_with("receiver.") && before.values != after.values) {
      receiver_moved = true;
    }
  }
  EXPECT_TRUE(receiver_moved);
}

TEST(Trainer, NonFiniteLossDumpsMinibatch) {
  data::Dataset ds = tiny_dataset(4, 5);
  ds.sender_views[2][0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig c = tiny_train_config(ds);
  c.diagnostic_dir = scratch_dir("nan_dump");
  try {
    train(c, ds);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("nonfinite_update_"), std::string::npos) << msg;
  }
  bool found = false;
  for (const auto& f : std::filesystem::directory_iterator(c.diagnostic_dir)) {
    found = found || f.path().filename().string().starts_with("nonfinite_update_");
  }
  EXPECT_TRUE(found);
  std::filesystem::remove_all(c.diagnostic_dir);
}

TEST(Trainer, CheckpointRestoresModel) {
  const data::Dataset ds = tiny_dataset(4, 5);
  TrainConfig c = tiny_train_config(ds);
  c.max_epochs = 1;
  const TrainResult r = train(c, ds);
  const auto dir = scratch_dir("ckpt");
  nn::save_checkpoint(model_checkpoint(r.model, c, r), dir);
  const Model back = load_model(dir);
  ASSERT_EQ(back.params.size(), r.model.params.size());
  for (std::size_t i = 0; i < back.params.size(); ++i) {
    EXPECT_EQ(back.params.tensors()[i].values, r.model.params.tensors()[i].values);
  }
  const auto x = evaluate(back, ds, ds.split(data::kValidSplit), c.max_steps);
  const auto y = evaluate(r.model, ds, ds.split(data::kValidSplit), c.max_steps);
  EXPECT_EQ(x.acc_k, y.acc_k);
  EXPECT_EQ(x.mean_length, y.mean_length);
  std::filesystem::remove_all(dir);
}

TEST(Trainer, LogCsvHeader) {
  EpochRecord e;
  e.epoch = 1;
  e.val_acc_k = 0.5;
  const std::string csv = training_log_csv({e});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "epoch,train_loss,L_c,L_r,L_B,H_stop,H_msg,val_acc@K,val_acc@1,mean_length");
  EXPECT_EQ(csv.substr(csv.find('\n') + 1), "1,0,0,0,0,0,0,0.5,0,0\n");
}

TEST(Evaluate, ThreadedMatchesSerial) {
  const data::Dataset ds = tiny_dataset(4, 5);
  const Model m = Model::create(tiny_config(ds), 2);
  const auto a = evaluate(m, ds, ds.split(data::kValidSplit), 3, 2, 1);
  const auto b = evaluate(m, ds, ds.split(data::kValidSplit), 3, 2, 4);
  EXPECT_EQ(a.acc_k, b.acc_k);
  EXPECT_EQ(a.acc_1, b.acc_1);
  EXPECT_LE(a.acc_1, a.acc_k);
  EXPECT_EQ(a.traces.size(), 16u);
  EXPECT_THROW(evaluate(m, ds, ds.split(data::kValidSplit), 3, 5), ConfigError);
}

TEST(Evaluate, OracleTwoObjectGameIsPerfect) {
  const auto g = refgame::testing::oracle_two_object_game();
  for (const char* split : {data::kTrainSplit, data::kValidSplit, data::kTestSplit}) {
    const auto r = evaluate(g.model, g.dataset, g.dataset.split(split), 5, 1);
    EXPECT_EQ(r.acc_1, 1.0) << split;
    EXPECT_EQ(r.mean_length, 1.0) << split;
  }
}

}  // namespace
}  // namespace refgame::training
