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

#include <cstdint>

#include "refgame/agents/model_config.hpp"
#include "refgame/agents/receiver.hpp"
#include "refgame/agents/sender.hpp"
#include "refgame/core/rng.hpp"
#include "refgame/game/message.hpp"
#include "refgame/nn/layers.hpp"
#include "refgame/nn/param.hpp"

namespace refgame::training {

using nn::Matrix;
using nn::ParamSet;
using nn::Tape;
using nn::Var;

// Learned reward predictors: B_s(o_s, m_r^{t-1}) and B_r(m_s^t, h_r^{t-1}).
// Inputs are constants or detached memories, so baseline regression never
// reaches agent parameters.
class BaselineNet {
 public:
  static BaselineNet create(ParamSet& params, const agents::ModelConfig& cfg) {
    BaselineNet b;
    b.view_dim_ = cfg.sender_input_dim;
    b.message_dim_ = cfg.message_dim;
    b.memory_dim_ = cfg.memory_dim;
    b.sender_ = nn::Mlp::create(params, "baseline.sender", cfg.sender_input_dim + cfg.message_dim,
                                cfg.baseline_hidden, 1, nn::Activation::kRelu);
    b.receiver_ = nn::Mlp::create(params, "baseline.receiver", cfg.message_dim + cfg.memory_dim,
                                  cfg.baseline_hidden, 1, nn::Activation::kRelu);
    return b;
  }

  void init(ParamSet& params, Rng& rng) const {
    sender_.init(params, rng);
    receiver_.init(params, rng);
  }

  Var sender_value(Tape& tape, const ParamSet& params, const Matrix& view,
                   const game::BinaryMessage& reply) const {
    Eigen::VectorXd in(view_dim_ + message_dim_);
    in.head(view_dim_) = view.cols() == 1 ? Eigen::VectorXd(view.col(0)) : Eigen::VectorXd(view.rowwise().mean());
    in.tail(message_dim_) = reply.as_real();
    return sender_.forward(tape, params, tape.constant(in));
  }

  // `memory` is detached here.
  Var receiver_value(Tape& tape, const ParamSet& params, const game::BinaryMessage& message,
                     Var memory) const {
    Var in = tape.concat({tape.constant(message.as_real()), tape.detach(memory)});
    return receiver_.forward(tape, params, in);
  }

 private:
  int view_dim_ = 0;
  int message_dim_ = 0;
  int memory_dim_ = 0;
  nn::Mlp sender_, receiver_;
};

// All trainable state of one agent pair plus its baselines, in one ParamSet.
// Tensor names are prefixed "sender.", "receiver." and "baseline.".
struct Model {
  agents::ModelConfig config;
  ParamSet params;
  agents::Sender sender;
  agents::Receiver receiver;
  BaselineNet baselines;

  // Registers the tensors without initializing them.
  static Model build(const agents::ModelConfig& cfg) {
    cfg.validate();
    Model m;
    m.config = cfg;
    m.sender = agents::Sender::create(m.params, cfg);
    m.receiver = agents::Receiver::create(m.params, cfg);
    m.baselines = BaselineNet::create(m.params, cfg);
    return m;
  }

  static Model create(const agents::ModelConfig& cfg, std::uint64_t seed) {
    Model m = build(cfg);
    Rng rng(derive_seed(seed, {0x1417}));
    m.sender.init(m.params, rng);
    m.receiver.init(m.params, rng);
    m.baselines.init(m.params, rng);
    return m;
  }
};

}  // namespace refgame::training
