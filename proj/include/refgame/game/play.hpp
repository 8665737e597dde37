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

// The exchange loop. The receiver opens with its learned message m_r^0; at
// each step t the sender answers m_s^t = A_S(o_s, m_r^{t-1}), the receiver
// updates its memory, decides whether to stop, and (if it continues) replies
// with m_r^t. At t = T_max the prediction is taken regardless of the stop
// decision and the episode is flagged as force-stopped.

#pragma once

#include <string>
#include <vector>

#include "refgame/agents/receiver.hpp"
#include "refgame/agents/sender.hpp"
#include "refgame/core/error.hpp"
#include "refgame/core/rng.hpp"
#include "refgame/game/instance.hpp"
#include "refgame/game/message.hpp"
#include "refgame/game/trace.hpp"
#include "refgame/nn/tape.hpp"

namespace refgame::game {

using nn::Tape;
using nn::Var;

// Source of every discrete choice made during an episode.
class ActionSource {
 public:
  virtual ~ActionSource() = default;
  virtual BinaryMessage initial_message(const Vector& probs) = 0;
  virtual BinaryMessage sender_message(int step, const Vector& probs) = 0;
  virtual bool stop(int step, double prob) = 0;
  virtual BinaryMessage receiver_message(int step, const Vector& probs) = 0;
};

// Training mode: every choice is sampled.
class SampledActions final : public ActionSource {
 public:
  explicit SampledActions(Rng& rng) : rng_(&rng) {}
  BinaryMessage initial_message(const Vector& p) override { return sample_message(p, *rng_); }
  BinaryMessage sender_message(int, const Vector& p) override { return sample_message(p, *rng_); }
  bool stop(int, double p) override { return uniform01(*rng_) < p; }
  BinaryMessage receiver_message(int, const Vector& p) override { return sample_message(p, *rng_); }

 private:
  Rng* rng_;
};

// Test mode: every choice is its most likely value (p == 0.5 -> 1).
class GreedyActions final : public ActionSource {
 public:
  BinaryMessage initial_message(const Vector& p) override { return greedy_decode(p); }
  BinaryMessage sender_message(int, const Vector& p) override { return greedy_decode(p); }
  bool stop(int, double p) override { return p >= 0.5; }
  BinaryMessage receiver_message(int, const Vector& p) override { return greedy_decode(p); }
};

// Re-issues the choices recorded in a trace.
class ReplayActions final : public ActionSource {
 public:
  explicit ReplayActions(const EpisodeTrace& trace) : trace_(&trace) {}
  BinaryMessage initial_message(const Vector&) override { return trace_->initial_message; }
  BinaryMessage sender_message(int t, const Vector&) override { return at(t).sender_message; }
  bool stop(int t, double) override { return at(t).stop; }
  BinaryMessage receiver_message(int t, const Vector&) override {
    const auto& s = at(t);
    if (!s.receiver_message) throw UsageError("replayed trace has no receiver message at step " + std::to_string(t));
    return *s.receiver_message;
  }

 private:
  const StepRecord& at(int t) const {
    if (t < 1 || t > trace_->length()) {
      throw UsageError("replayed trace has no step " + std::to_string(t));
    }
    return trace_->steps[static_cast<std::size_t>(t - 1)];
  }
  const EpisodeTrace* trace_;
};

// Tape handles of one step, for loss assembly.
struct StepVars {
  Var sender_probs;
  Var memory;
  Var embeddings;
  Var stop_prob;
  Var belief;
  Var receiver_probs;  // invalid at the terminal step
};

struct EpisodeGraph {
  Var initial_message_probs;
  Var initial_memory;
  std::vector<StepVars> steps;
};

struct Episode {
  EpisodeTrace trace;
  EpisodeGraph graph;
};

inline Episode play_episode(const agents::Sender& sender, const agents::Receiver& receiver,
                            const nn::ParamSet& params, const GameInstance& inst,
                            const GameConfig& cfg, ActionSource& actions, Tape& tape) {
  if (sender.message_dim() != cfg.message_dim || receiver.message_dim() != cfg.message_dim) {
    throw DimensionError("agents use d = " + std::to_string(sender.message_dim()) + "/" +
                         std::to_string(receiver.message_dim()) + ", game config has d = " +
                         std::to_string(cfg.message_dim));
  }
  if (cfg.max_steps < 1) throw ConfigError("T_max must be >= 1");
  if (inst.sender_view == nullptr || inst.receiver_views.empty()) {
    throw UsageError("game instance has no views");
  }
  Episode ep;
  EpisodeTrace& tr = ep.trace;
  tr.class_id = inst.class_id;
  tr.view_index = inst.view_index;
  tr.target = inst.target;
  tr.num_candidates = inst.num_candidates();

  ep.graph.initial_message_probs = receiver.initial_message_probs(tape);
  tr.initial_message_probs = tape.vec(ep.graph.initial_message_probs);
  tr.initial_message = actions.initial_message(tr.initial_message_probs);
  ep.graph.initial_memory = receiver.initial_memory(tape);

  Var memory = ep.graph.initial_memory;
  Var embeddings;
  BinaryMessage reply = tr.initial_message;
  for (int t = 1; t <= cfg.max_steps; ++t) {
    StepVars vars;
    StepRecord rec;
    vars.sender_probs = sender.forward(tape, params, *inst.sender_view, reply.as_real()).probs;
    rec.sender_probs = tape.vec(vars.sender_probs);
    rec.sender_message = actions.sender_message(t, rec.sender_probs);

    const agents::ReceiverStep rs = receiver.step(
        tape, params, tape.constant(rec.sender_message.as_real()), memory, inst.receiver_views, embeddings);
    embeddings = rs.embeddings;
    vars.memory = rs.memory;
    vars.embeddings = rs.embeddings;
    vars.stop_prob = rs.stop_prob;
    vars.belief = rs.belief;
    rec.memory = tape.vec(rs.memory);
    rec.belief = tape.vec(rs.belief);
    rec.stop_prob = tape.scalar(rs.stop_prob);
    rec.stop = actions.stop(t, rec.stop_prob);

    const bool last = rec.stop || t == cfg.max_steps;
    if (!last) {
      vars.receiver_probs = receiver.message_probs(tape, params, rs.memory, rs.belief, rs.embeddings);
      rec.receiver_probs = tape.vec(vars.receiver_probs);
      rec.receiver_message = actions.receiver_message(t, rec.receiver_probs);
      reply = *rec.receiver_message;
    }
    tr.steps.push_back(std::move(rec));
    ep.graph.steps.push_back(vars);
    if (last) {
      tr.forced_stop = t == cfg.max_steps;
      break;
    }
    memory = rs.memory;
  }
  tr.prediction = argmax_lowest(tr.final_belief());
  tr.reward = score(inst, tr.prediction);
  return ep;
}

// Plays with the action policy implied by cfg.mode.
inline Episode play_episode(const agents::Sender& sender, const agents::Receiver& receiver,
                            const nn::ParamSet& params, const GameInstance& inst,
                            const GameConfig& cfg, Rng& rng, Tape& tape) {
  if (cfg.mode == PlayMode::kTestGreedy) {
    GreedyActions greedy;
    return play_episode(sender, receiver, params, inst, cfg, greedy, tape);
  }
  SampledActions sampled(rng);
  return play_episode(sender, receiver, params, inst, cfg, sampled, tape);
}

}  // namespace refgame::game
