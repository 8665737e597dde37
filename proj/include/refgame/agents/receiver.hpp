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

#include <string>
#include <vector>

#include "refgame/agents/model_config.hpp"
#include "refgame/agents/sender.hpp"
#include "refgame/core/error.hpp"
#include "refgame/nn/layers.hpp"
#include "refgame/nn/tape.hpp"

namespace refgame::agents {

struct ReceiverStep {
  Var memory;      // h_r^t (q x 1)
  Var embeddings;  // g_r(o) for every candidate (q x n)
  Var stop_prob;   // p(s^t = 1) (1 x 1)
  Var belief;      // p(o_r = 1) over candidates (n x 1)
};

// Recurrent receiver: a GRU memory over sender messages with a stop head, a
// prediction head (softmax of g_r(o)^T h over candidates) and a message head
// conditioned on the belief-weighted candidate embedding.
class Receiver {
 public:
  static Receiver create(ParamSet& params, const ModelConfig& cfg) {
    cfg.validate();
    Receiver r;
    r.kind_ = cfg.receiver;
    r.message_dim_ = cfg.message_dim;
    r.memory_dim_ = cfg.memory_dim;
    r.input_dim_ = cfg.receiver_input_dim;
    const int q = cfg.memory_dim;
    r.gru_ = nn::GruParams::create(params, "receiver.gru", cfg.message_dim, q);
    r.initial_memory_ = params.add("receiver.initial_memory", q);
    r.initial_message_ = params.add("receiver.initial_message_logits", cfg.message_dim);
    r.stop_ = nn::Linear::create(params, "receiver.stop", q, 1);
    r.msg_memory_ = nn::Linear::create(params, "receiver.msg_memory", q, q);
    r.msg_belief_ = nn::Linear::create(params, "receiver.msg_belief", q, q, false);
    r.msg_out_ = nn::Linear::create(params, "receiver.msg_out", q, cfg.message_dim);
    r.embed_ = nn::Linear::create(params, "receiver.embed", cfg.receiver_input_dim, q);
    if (cfg.receiver == ReceiverKind::kAttention) {
      const int a = cfg.receiver_attention_hidden;
      r.att_word_ = nn::Linear::create(params, "receiver.att.word", cfg.receiver_input_dim, a);
      r.att_memory_ = nn::Linear::create(params, "receiver.att.memory", q, a, false);
      r.att_score_ = params.add("receiver.att.score", a);
    }
    return r;
  }

  void init(ParamSet& params, Rng& rng) const {
    gru_.init(params, rng);
    params[initial_memory_].values.setZero();
    params[initial_message_].values.setZero();
    stop_.init(params, rng);
    msg_memory_.init(params, rng);
    msg_belief_.init(params, rng);
    msg_out_.init(params, rng);
    embed_.init(params, rng);
    if (kind_ == ReceiverKind::kAttention) {
      att_word_.init(params, rng);
      att_memory_.init(params, rng);
      nn::init_xavier_uniform(params[att_score_], rng);
    }
  }

  ReceiverKind kind() const { return kind_; }
  int message_dim() const { return message_dim_; }
  int memory_dim() const { return memory_dim_; }
  bool embeddings_track_memory() const { return kind_ == ReceiverKind::kAttention; }

  Var initial_memory(Tape& tape) const { return tape.param(initial_memory_); }

  // Bernoulli probabilities of the learned opening message m_r^0.
  Var initial_message_probs(Tape& tape) const {
    return tape.sigmoid(tape.param(initial_message_));
  }

  // Attention-pooled word vectors of one description scored against memory,
  // mapped to R^q. Returns (embedding, weights).
  std::pair<Var, Var> attend(Tape& tape, const ParamSet& params, const Matrix& words,
                             Var memory) const {
    if (kind_ != ReceiverKind::kAttention) throw UsageError("pooled receiver has no attention scorer");
    if (words.cols() < 1) throw DimensionError("receiver attention over an empty word set");
    check_view(words);
    Var w = tape.constant(words);
    Var hidden = tape.relu(tape.add(nn::affine(tape, params, att_word_, w),
                                    nn::affine(tape, params, att_memory_, memory)));
    Var scores = tape.matmul_tn(hidden, tape.param(att_score_));
    Var weights = tape.softmax(scores);
    return {nn::affine(tape, params, embed_, tape.matmul(w, weights)), weights};
  }

  // g_r(o) for every candidate, one column each (q x n). The pooled variant
  // averages each description's word vectors and ignores `memory`.
  Var embed_candidates(Tape& tape, const ParamSet& params, const std::vector<const Matrix*>& views,
                       Var memory) const {
    if (views.empty()) throw DimensionError("receiver needs a nonempty candidate set");
    if (kind_ == ReceiverKind::kPooled) {
      Matrix means(input_dim_, static_cast<Index>(views.size()));
      for (std::size_t i = 0; i < views.size(); ++i) {
        check_view(*views[i]);
        means.col(static_cast<Index>(i)) = views[i]->rowwise().mean();
      }
      return nn::affine(tape, params, embed_, tape.constant(std::move(means)));
    }
    std::vector<Var> cols;
    cols.reserve(views.size());
    for (const Matrix* v : views) cols.push_back(attend(tape, params, *v, memory).first);
    return tape.hstack(cols);
  }

  // Softmax over candidates of g_r(o)^T h.
  Var predict(Tape& tape, Var embeddings, Var memory) const {
    if (tape.value(embeddings).cols() < 1) throw DimensionError("prediction over empty O_R");
    return tape.softmax(tape.matmul_tn(embeddings, memory));
  }

  Var stop_prob(Tape& tape, const ParamSet& params, Var memory) const {
    return tape.sigmoid(nn::affine(tape, params, stop_, memory));
  }

  // p(m_{r,j} = 1) = sigmoid(w_j . tanh(W h + U (sum_o belief(o) g_r(o)) + c) + b_j).
  Var message_probs(Tape& tape, const ParamSet& params, Var memory, Var belief,
                    Var embeddings) const {
    Var expected = tape.matmul(embeddings, belief);
    Var pre = tape.add(nn::affine(tape, params, msg_memory_, memory),
                       nn::affine(tape, params, msg_belief_, expected));
    return tape.sigmoid(nn::affine(tape, params, msg_out_, tape.tanh(pre)));
  }

  // Memory update, stop probability and belief for one incoming message.
  // `cached_embeddings` is reused by the pooled variant when valid.
  ReceiverStep step(Tape& tape, const ParamSet& params, Var message, Var prev_memory,
                    const std::vector<const Matrix*>& views, Var cached_embeddings = {}) const {
    if (tape.value(message).rows() != message_dim_) {
      throw DimensionError("receiver expects a " + std::to_string(message_dim_) +
                           "-bit message, got " + std::to_string(tape.value(message).rows()));
    }
    ReceiverStep s;
    s.memory = nn::gru_step(tape, params, gru_, message, prev_memory);
    s.embeddings = (cached_embeddings.valid() && !embeddings_track_memory())
                       ? cached_embeddings
                       : embed_candidates(tape, params, views, s.memory);
    s.stop_prob = stop_prob(tape, params, s.memory);
    s.belief = predict(tape, s.embeddings, s.memory);
    return s;
  }

  const nn::GruParams& gru() const { return gru_; }
  const nn::Linear& stop_layer() const { return stop_; }
  const nn::Linear& embed_layer() const { return embed_; }
  const nn::Linear& message_out_layer() const { return msg_out_; }
  nn::ParamId initial_memory_param() const { return initial_memory_; }
  nn::ParamId initial_message_param() const { return initial_message_; }

 private:
  void check_view(const Matrix& v) const {
    if (v.rows() != input_dim_) {
      throw DimensionError("receiver view has dimension " + std::to_string(v.rows()) +
                           ", receiver expects " + std::to_string(input_dim_));
    }
  }

  ReceiverKind kind_ = ReceiverKind::kPooled;
  int message_dim_ = 0;
  int memory_dim_ = 0;
  int input_dim_ = 0;
  nn::GruParams gru_;
  nn::ParamId initial_memory_, initial_message_;
  nn::Linear stop_, msg_memory_, msg_belief_, msg_out_, embed_;
  nn::Linear att_word_, att_memory_;
  nn::ParamId att_score_;
};

}  // namespace refgame::agents
