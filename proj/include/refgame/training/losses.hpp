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

// Per-instance losses. Two forms are provided: tape builders used for
// training, and value-level functions over a recorded trace used for
// reporting and testing. Both compute the same numbers.
//
// Policy-gradient terms, with R the episode reward:
//   opening message m_r^0      advantage R - B_r(0, h_r^0)
//   sender message m_s^t       advantage R - B_s(o_s, m_r^{t-1})
//   stop s^t and reply m_r^t   advantage R - B_r(m_s^t, h_r^{t-1})
// The stop term of a forced stop is omitted; the terminal step has no reply.

#pragma once

#include <cmath>
#include <vector>

#include "refgame/core/error.hpp"
#include "refgame/game/instance.hpp"
#include "refgame/game/play.hpp"
#include "refgame/game/trace.hpp"
#include "refgame/nn/tape.hpp"
#include "refgame/training/model.hpp"

namespace refgame::training {

using game::EpisodeTrace;
using Vector = Eigen::VectorXd;

struct LossWeights {
  double lambda_stop = 0.08;
  double lambda_msg = 0.01;

  void validate() const {
    if (!(lambda_stop >= 0.0) || !(lambda_msg >= 0.0)) {
      throw ConfigError("entropy coefficients must be >= 0");
    }
  }
};

struct LossBreakdown {
  double classification = 0.0;  // L_c
  double reinforce = 0.0;       // L_r
  double baseline = 0.0;        // L_B
  double entropy_stop = 0.0;    // H_stop
  double entropy_msg = 0.0;     // H_msg
  double total = 0.0;           // L_c + L_r - lambda_s H_stop - lambda_m H_msg

  // What the optimizer minimizes: total + L_B.
  double objective() const { return total + baseline; }
};

// Baseline outputs along one episode.
struct BaselineValues {
  double initial = 0.0;          // B_r(0, h_r^0), for m_r^0
  std::vector<double> sender;    // B_s(o_s, m_r^{t-1}), t = 1..T
  std::vector<double> receiver;  // B_r(m_s^t, h_r^{t-1}), t = 1..T
};

// ---- value level ----

inline double log_bernoulli(const Vector& probs, const game::BinaryMessage& m) {
  if (probs.size() != static_cast<Eigen::Index>(m.size())) {
    throw DimensionError("log_bernoulli: " + std::to_string(probs.size()) + " probabilities for " +
                         std::to_string(m.size()) + " bits");
  }
  double lp = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    lp += std::log(nn::clamp_prob(m[static_cast<std::size_t>(j)] ? probs(j) : 1.0 - probs(j)));
  }
  return lp;
}

inline double sum_entropy(const Vector& probs) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) h += nn::bernoulli_entropy(probs(j));
  return h;
}

// -log p(target) under the final belief.
inline double classification_loss(const EpisodeTrace& trace) {
  if (trace.steps.empty()) throw UsageError("classification_loss on an empty trace");
  return -std::log(nn::clamp_prob(trace.final_belief()(trace.target)));
}

inline void check_baselines(const EpisodeTrace& trace, const BaselineValues& b) {
  const auto n = trace.steps.size();
  if (b.sender.size() != n || b.receiver.size() != n) {
    throw DimensionError("baseline values cover " + std::to_string(b.sender.size()) + "/" +
                         std::to_string(b.receiver.size()) + " steps, trace has " +
                         std::to_string(n));
  }
}

// log-probability of the stop decision taken at step t (1-based); zero for
// a forced stop.
inline double stop_log_prob(const EpisodeTrace& trace, int t) {
  const auto& s = trace.steps[static_cast<std::size_t>(t - 1)];
  if (t == trace.length() && trace.forced_stop) return 0.0;
  return std::log(nn::clamp_prob(s.stop ? s.stop_prob : 1.0 - s.stop_prob));
}

inline double reinforce_loss(const EpisodeTrace& trace, const BaselineValues& b) {
  check_baselines(trace, b);
  const double r = trace.reward;
  double surrogate = (r - b.initial) * log_bernoulli(trace.initial_message_probs, trace.initial_message);
  for (int t = 1; t <= trace.length(); ++t) {
    const auto& s = trace.steps[static_cast<std::size_t>(t - 1)];
    const auto i = static_cast<std::size_t>(t - 1);
    surrogate += (r - b.sender[i]) * log_bernoulli(s.sender_probs, s.sender_message);
    double receiver_lp = stop_log_prob(trace, t);
    if (s.receiver_message) receiver_lp += log_bernoulli(s.receiver_probs, *s.receiver_message);
    surrogate += (r - b.receiver[i]) * receiver_lp;
  }
  return -surrogate;
}

inline double baseline_loss(const EpisodeTrace& trace, const BaselineValues& b) {
  check_baselines(trace, b);
  const double r = trace.reward;
  double loss = 0.0;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    loss += (r - b.sender[i]) * (r - b.sender[i]) + (r - b.receiver[i]) * (r - b.receiver[i]);
  }
  return loss;
}

struct EntropyTerms {
  double stop = 0.0;
  double msg = 0.0;
};

inline EntropyTerms entropy_terms(const EpisodeTrace& trace) {
  EntropyTerms h;
  for (const auto& s : trace.steps) {
    h.stop += nn::bernoulli_entropy(s.stop_prob);
    h.msg += sum_entropy(s.sender_probs);
    if (s.receiver_message) h.msg += sum_entropy(s.receiver_probs);
  }
  return h;
}

inline LossBreakdown loss_breakdown(const EpisodeTrace& trace, const BaselineValues& b,
                                    const LossWeights& w) {
  LossBreakdown out;
  out.classification = classification_loss(trace);
  out.reinforce = reinforce_loss(trace, b);
  out.baseline = baseline_loss(trace, b);
  const EntropyTerms h = entropy_terms(trace);
  out.entropy_stop = h.stop;
  out.entropy_msg = h.msg;
  out.total = out.classification + out.reinforce - w.lambda_stop * h.stop - w.lambda_msg * h.msg;
  return out;
}

// ---- tape level ----

struct BaselineVars {
  Var initial;
  std::vector<Var> sender;
  std::vector<Var> receiver;
};

struct LossVars {
  Var classification, reinforce, baseline, entropy_stop, entropy_msg, total, objective;
  BaselineVars baselines;
};

inline BaselineVars build_baselines(Tape& tape, const Model& model, const game::GameInstance& inst,
                                    const game::Episode& ep) {
  const EpisodeTrace& tr = ep.trace;
  const auto& params = model.params;
  BaselineVars b;
  b.initial = model.baselines.receiver_value(tape, params, game::BinaryMessage(tr.initial_message.size()),
                                             ep.graph.initial_memory);
  Var prev_memory = ep.graph.initial_memory;
  for (std::size_t i = 0; i < tr.steps.size(); ++i) {
    const auto& reply = i == 0 ? tr.initial_message : *tr.steps[i - 1].receiver_message;
    b.sender.push_back(model.baselines.sender_value(tape, params, *inst.sender_view, reply));
    b.receiver.push_back(
        model.baselines.receiver_value(tape, params, tr.steps[i].sender_message, prev_memory));
    prev_memory = ep.graph.steps[i].memory;
  }
  return b;
}

inline BaselineValues baseline_values(const Tape& tape, const BaselineVars& v) {
  BaselineValues out;
  out.initial = tape.scalar(v.initial);
  for (Var s : v.sender) out.sender.push_back(tape.scalar(s));
  for (Var r : v.receiver) out.receiver.push_back(tape.scalar(r));
  return out;
}

// Evaluates the baselines along a recorded trace on a scratch tape.
inline BaselineValues baseline_values(const Model& model, const game::GameInstance& inst,
                                      const EpisodeTrace& trace) {
  Tape tape(model.params);
  game::ReplayActions replay(trace);
  game::GameConfig cfg;
  cfg.message_dim = model.config.message_dim;
  cfg.max_steps = trace.length();
  const game::Episode ep =
      game::play_episode(model.sender, model.receiver, model.params, inst, cfg, replay, tape);
  return baseline_values(tape, build_baselines(tape, model, inst, ep));
}

// Assembles every loss term of one played episode on its tape. Baselines enter
// the policy-gradient terms as constants.
inline LossVars build_losses(Tape& tape, const Model& model, const game::GameInstance& inst,
                             const game::Episode& ep, const LossWeights& w) {
  const EpisodeTrace& tr = ep.trace;
  if (tr.steps.empty() || ep.graph.steps.size() != tr.steps.size()) {
    throw UsageError("build_losses needs a complete episode");
  }
  LossVars out;
  out.baselines = build_baselines(tape, model, inst, ep);
  const double r = tr.reward;
  const auto& g = ep.graph;

  out.classification = tape.scale(tape.log_clamped(tape.pick(g.steps.back().belief, tr.target)), -1.0);

  auto pg_term = [&](Var log_prob, Var baseline) {
    return tape.scale(log_prob, -(r - tape.scalar(baseline)));
  };
  Var reinforce = pg_term(tape.bernoulli_log_prob(g.initial_message_probs, tr.initial_message.bits()),
                          out.baselines.initial);
  Var baseline = tape.scalar_constant(0.0);
  Var h_stop = tape.scalar_constant(0.0);
  Var h_msg = tape.scalar_constant(0.0);
  Var reward = tape.scalar_constant(r);
  for (std::size_t i = 0; i < tr.steps.size(); ++i) {
    const auto& s = tr.steps[i];
    const auto& v = g.steps[i];
    const bool forced = i + 1 == tr.steps.size() && tr.forced_stop;
    reinforce = tape.add(reinforce, pg_term(tape.bernoulli_log_prob(v.sender_probs, s.sender_message.bits()),
                                            out.baselines.sender[i]));
    Var receiver_lp = tape.scalar_constant(0.0);
    if (!forced) {
      const std::uint8_t bit = s.stop ? 1 : 0;
      receiver_lp = tape.add(receiver_lp, tape.bernoulli_log_prob(v.stop_prob, std::span(&bit, 1)));
    }
    if (s.receiver_message) {
      receiver_lp = tape.add(receiver_lp, tape.bernoulli_log_prob(v.receiver_probs, s.receiver_message->bits()));
      h_msg = tape.add(h_msg, tape.bernoulli_entropy(v.receiver_probs));
    }
    reinforce = tape.add(reinforce, pg_term(receiver_lp, out.baselines.receiver[i]));
    h_stop = tape.add(h_stop, tape.bernoulli_entropy(v.stop_prob));
    h_msg = tape.add(h_msg, tape.bernoulli_entropy(v.sender_probs));

    Var ds = tape.sub(reward, out.baselines.sender[i]);
    Var dr = tape.sub(reward, out.baselines.receiver[i]);
    baseline = tape.add(baseline, tape.add(tape.mul(ds, ds), tape.mul(dr, dr)));
  }
  out.reinforce = reinforce;
  out.baseline = baseline;
  out.entropy_stop = h_stop;
  out.entropy_msg = h_msg;
  out.total = tape.sub(tape.add(out.classification, reinforce),
                       tape.add(tape.scale(h_stop, w.lambda_stop), tape.scale(h_msg, w.lambda_msg)));
  out.objective = tape.add(out.total, baseline);
  return out;
}

inline LossBreakdown loss_breakdown(const Tape& tape, const LossVars& v) {
  LossBreakdown out;
  out.classification = tape.scalar(v.classification);
  out.reinforce = tape.scalar(v.reinforce);
  out.baseline = tape.scalar(v.baseline);
  out.entropy_stop = tape.scalar(v.entropy_stop);
  out.entropy_msg = tape.scalar(v.entropy_msg);
  out.total = tape.scalar(v.total);
  return out;
}

}  // namespace refgame::training
