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

// Small fixtures shared by the unit tests.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "refgame/agents/model_config.hpp"
#include "refgame/data/splits.hpp"
#include "refgame/data/synthetic.hpp"
#include "refgame/game/play.hpp"
#include "refgame/nn/grad_check.hpp"
#include "refgame/training/losses.hpp"
#include "refgame/training/model.hpp"

namespace refgame::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("refgame_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::vector<int> iota_ids(int begin, int end) {
  std::vector<int> v;
  for (int i = begin; i < end; ++i) v.push_back(i);
  return v;
}

// `classes` in-domain classes with tiny features.
inline data::Dataset tiny_dataset(int classes = 4, std::uint64_t seed = 1, int regions = 1,
                                  bool word_sets = false) {
  data::SyntheticSpec s;
  s.n_classes = classes;
  s.n_attributes = 4;
  s.sender_dim = 5;
  s.receiver_dim = 4;
  s.views_per_class = 12;
  s.seed = seed;
  s.sender_regions = regions;
  s.receiver_word_sets = word_sets;
  return data::make_splits(data::generate_synthetic(s), iota_ids(0, classes), {}, {}, {6, 4, 2, 0});
}

inline agents::ModelConfig tiny_config(const data::Dataset& ds, int message_dim = 3, int memory_dim = 4) {
  agents::ModelConfig c;
  c.message_dim = message_dim;
  c.sender_input_dim = ds.sender_dim;
  c.receiver_input_dim = ds.receiver_dim;
  c.sender_embed_dim = 4;
  c.sender_hidden = 5;
  c.sender_attention_hidden = 3;
  c.memory_dim = memory_dim;
  c.receiver_attention_hidden = 3;
  c.baseline_hidden = 4;
  return c;
}

// Two objects told apart by the sign of a one-dimensional feature. The sender
// writes the sign into its single bit, the receiver's memory copies the bit
// and stops at once, so greedy play is always right.
struct OracleGame {
  data::Dataset dataset;
  training::Model model;
};

inline OracleGame oracle_two_object_game() {
  OracleGame g;
  data::Dataset& ds = g.dataset;
  ds.sender_dim = 1;
  ds.receiver_dim = 1;
  ds.class_names = {"left", "right"};
  ds.sender_views = {{}, {}};
  for (int v = 0; v < 4; ++v) {
    ds.sender_views[0].push_back(nn::Matrix::Constant(1, 1, -1.0 - 0.1 * v));
    ds.sender_views[1].push_back(nn::Matrix::Constant(1, 1, 1.0 + 0.1 * v));
  }
  ds.receiver_views = {nn::Matrix::Constant(1, 1, -1.0), nn::Matrix::Constant(1, 1, 1.0)};
  ds = data::make_splits(ds, {0, 1}, {}, {}, {2, 1, 1, 0});

  agents::ModelConfig c;
  c.message_dim = 1;
  c.sender_input_dim = 1;
  c.receiver_input_dim = 1;
  c.sender_embed_dim = 1;
  c.sender_hidden = 1;
  c.memory_dim = 1;
  c.baseline_hidden = 2;
  g.model = training::Model::create(c, 0);
  nn::ParamSet& p = g.model.params;
  auto set = [&](const std::string& name, std::initializer_list<double> values) {
    nn::ParamTensor& t = p[p.find(name)];
    Eigen::Index i = 0;
    for (double v : values) t.values(i++) = v;
  };
  for (auto& t : p.tensors()) {
    if (!t.name.starts_with("baseline.")) t.values.setZero();
  }
  set("sender.image_embed.weight", {1.0});
  set("sender.hidden.weight", {1.0, 0.0, 0.0, 0.0});
  set("sender.out.weight", {50.0});
  set("receiver.gru.b_z", {50.0});
  set("receiver.gru.w_h", {4.0});
  set("receiver.gru.b_h", {-2.0});
  set("receiver.embed.weight", {1.0});
  set("receiver.stop.bias", {50.0});
  return g;
}

struct EpisodeGradCheck {
  nn::GradCheckReport agents;     // surrogate total against agent tensors
  nn::GradCheckReport baselines;  // baseline regression against baseline tensors
  bool passed() const { return agents.passed && baselines.passed; }
};

// Finite-difference check of one recorded episode's losses. The sampled
// actions are replayed, so the losses are smooth in the parameters. The
// policy-gradient coefficients treat baselines as constants; for the agent
// check the baseline outputs are pinned (zero output weights) so that a
// perturbed agent parameter cannot move them.
inline EpisodeGradCheck check_episode_gradients(const training::Model& model, const game::GameInstance& inst,
                                                const game::EpisodeTrace& trace,
                                                const training::LossWeights& w,
                                                const nn::GradCheckOptions& opt) {
  auto loss_on = [&](training::Model& m, bool objective) {
    return [&m, &inst, &trace, &w, objective](nn::Tape& tape) {
      game::ReplayActions replay(trace);
      game::GameConfig cfg;
      cfg.message_dim = m.config.message_dim;
      cfg.max_steps = trace.length();
      const game::Episode ep = game::play_episode(m.sender, m.receiver, m.params, inst, cfg, replay, tape);
      const training::LossVars v = training::build_losses(tape, m, inst, ep, w);
      return objective ? v.baseline : v.total;
    };
  };
  EpisodeGradCheck out;

  training::Model pinned = model;
  for (auto& t : pinned.params.tensors()) {
    if (t.name.ends_with(".out.weight") && t.name.starts_with("baseline.")) t.values.setZero();
  }
  nn::GradCheckReport full = nn::grad_check(pinned.params, loss_on(pinned, false), opt);
  for (auto& t : full.tensors) {
    if (t.name.starts_with("baseline.")) continue;
    out.agents.max_rel_error = std::max(out.agents.max_rel_error, t.max_rel_error);
    out.agents.passed = out.agents.passed && t.passed;
    out.agents.tensors.push_back(t);
  }

  // A zero message with zero memory puts every ReLU of the fresh (zero bias)
  // baseline exactly on its kink; shift the biases off it.
  training::Model copy = model;
  for (auto& t : copy.params.tensors()) {
    if (t.name.starts_with("baseline.") && t.name.ends_with(".hidden.bias")) t.values.array() += 0.05;
  }
  full = nn::grad_check(copy.params, loss_on(copy, true), opt);
  for (auto& t : full.tensors) {
    if (!t.name.starts_with("baseline.")) continue;
    out.baselines.max_rel_error = std::max(out.baselines.max_rel_error, t.max_rel_error);
    out.baselines.passed = out.baselines.passed && t.passed;
    out.baselines.tensors.push_back(t);
  }
  return out;
}

}  // namespace refgame::testing
