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

#include "refgame/agents/model_config.hpp"
#include "refgame/core/error.hpp"
#include "refgame/nn/layers.hpp"
#include "refgame/nn/tape.hpp"

namespace refgame::agents {

using nn::Index;
using nn::Matrix;
using nn::ParamSet;
using nn::Tape;
using nn::Var;

// values (D x n) weighted by softmax(scores) (n x 1) -> D x 1.
inline Var attention_pool(Tape& tape, Var values, Var scores) {
  if (tape.value(values).cols() != tape.value(scores).rows()) {
    throw DimensionError("attention: " + std::to_string(tape.value(scores).rows()) +
                         " scores for " + std::to_string(tape.value(values).cols()) + " vectors");
  }
  return tape.matmul(values, tape.softmax(scores));
}

struct SenderOutput {
  Var probs;      // d x 1, p(m_{s,j} = 1)
  Var attention;  // n x 1 attention weights; invalid for the pooled sender
  Var input;      // view vector fed to the hidden layer
};

// Memory-less sender. The view and the received message are each embedded
// into a common space; the hidden layer sees [img, msg, img - msg, img * msg]
// and each message coordinate is an independent sigmoid head.
class Sender {
 public:
  static Sender create(ParamSet& params, const ModelConfig& cfg) {
    cfg.validate();
    Sender s;
    s.kind_ = cfg.sender;
    s.message_dim_ = cfg.message_dim;
    s.input_dim_ = cfg.sender_input_dim;
    const int e = cfg.sender_embed_dim;
    s.image_embed_ = nn::Linear::create(params, "sender.image_embed", cfg.sender_input_dim, e);
    s.message_embed_ = nn::Linear::create(params, "sender.message_embed", cfg.message_dim, e);
    s.hidden_ = nn::Linear::create(params, "sender.hidden", 4 * e, cfg.sender_hidden);
    s.out_ = nn::Linear::create(params, "sender.out", cfg.sender_hidden, cfg.message_dim);
    if (cfg.sender == SenderKind::kAttention) {
      const int a = cfg.sender_attention_hidden;
      s.att_view_ = nn::Linear::create(params, "sender.att.view", cfg.sender_input_dim, a);
      s.att_message_ = nn::Linear::create(params, "sender.att.message", cfg.message_dim, a, false);
      s.att_score_ = params.add("sender.att.score", a);
    }
    return s;
  }

  void init(ParamSet& params, Rng& rng) const {
    image_embed_.init(params, rng);
    message_embed_.init(params, rng);
    hidden_.init(params, rng);
    out_.init(params, rng);
    if (kind_ == SenderKind::kAttention) {
      att_view_.init(params, rng);
      att_message_.init(params, rng);
      nn::init_xavier_uniform(params[att_score_], rng);
    }
  }

  SenderKind kind() const { return kind_; }
  int message_dim() const { return message_dim_; }

  // Attention scores f_att(o_j, m_r) = v . tanh(A o_j + B m_r + c), one per
  // column of view_set.
  Var attention_scores(Tape& tape, const ParamSet& params, Var view_set, Var message) const {
    require_attention();
    Var per_view = nn::affine(tape, params, att_view_, view_set);
    Var from_msg = nn::affine(tape, params, att_message_, message);
    Var hidden = tape.tanh(tape.add(per_view, from_msg));
    return tape.matmul_tn(hidden, tape.param(att_score_));
  }

  // Attention-weighted sum of the view set; returns (pooled, weights).
  std::pair<Var, Var> attend(Tape& tape, const ParamSet& params, const Matrix& view_set,
                             Var message) const {
    if (view_set.cols() < 1) throw DimensionError("sender attention over an empty view set");
    check_view(view_set);
    Var views = tape.constant(view_set);
    Var scores = attention_scores(tape, params, views, message);
    Var weights = tape.softmax(scores);
    return {tape.matmul(views, weights), weights};
  }

  SenderOutput forward(Tape& tape, const ParamSet& params, const Matrix& view,
                       const Eigen::VectorXd& message) const {
    check_view(view);
    if (message.size() != message_dim_) {
      throw DimensionError("sender expects a " + std::to_string(message_dim_) +
                           "-bit message, got " + std::to_string(message.size()));
    }
    Var m = tape.constant(message);
    SenderOutput out;
    if (kind_ == SenderKind::kAttention) {
      auto [pooled, weights] = attend(tape, params, view, m);
      out.input = pooled;
      out.attention = weights;
    } else if (view.cols() == 1) {
      out.input = tape.constant(view);
    } else {
      out.input = tape.constant(Matrix(view.rowwise().mean()));
    }
    Var img = nn::affine(tape, params, image_embed_, out.input);
    Var msg = nn::affine(tape, params, message_embed_, m);
    Var joint = tape.concat({img, msg, tape.sub(img, msg), tape.mul(img, msg)});
    Var h = tape.tanh(nn::affine(tape, params, hidden_, joint));
    out.probs = tape.sigmoid(nn::affine(tape, params, out_, h));
    return out;
  }

  const nn::Linear& output_layer() const { return out_; }
  const nn::Linear& image_embed() const { return image_embed_; }
  const nn::Linear& message_embed() const { return message_embed_; }
  const nn::Linear& hidden_layer() const { return hidden_; }

 private:
  void check_view(const Matrix& view) const {
    if (view.rows() != input_dim_) {
      throw DimensionError("sender view has dimension " + std::to_string(view.rows()) +
                           ", sender expects " + std::to_string(input_dim_));
    }
  }
  void require_attention() const {
    if (kind_ != SenderKind::kAttention) throw UsageError("pooled sender has no attention scorer");
  }

  SenderKind kind_ = SenderKind::kPooled;
  int message_dim_ = 0;
  int input_dim_ = 0;
  nn::Linear image_embed_, message_embed_, hidden_, out_;
  nn::Linear att_view_, att_message_;
  nn::ParamId att_score_;
};

}  // namespace refgame::agents
