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

#include "refgame/core/error.hpp"
#include "refgame/core/rng.hpp"
#include "refgame/data/dataset.hpp"

namespace refgame::game {

using data::Matrix;

enum class PlayMode { kTrainSample, kTestGreedy };

struct GameConfig {
  int message_dim = 32;
  int max_steps = 10;
  PlayMode mode = PlayMode::kTrainSample;
  int k = 1;

  void validate(int num_candidates) const {
    if (message_dim < 1) throw ConfigError("message dimension d must be >= 1");
    if (max_steps < 1) throw ConfigError("T_max must be >= 1");
    if (k < 1 || k > num_candidates) {
      throw ConfigError("K = " + std::to_string(k) + " must lie in [1, " +
                        std::to_string(num_candidates) + "]");
    }
  }
};

// One sampled game: the sender's view of object `class_id` and the receiver's
// full candidate set. Views point into a Dataset (or caller-owned storage)
// that must outlive the instance.
struct GameInstance {
  int class_id = 0;
  int view_index = 0;
  const Matrix* sender_view = nullptr;
  std::vector<int> candidates;                  // class ids, O_R order
  std::vector<const Matrix*> receiver_views;    // parallel to candidates
  int target = 0;                               // index of class_id in candidates

  int num_candidates() const { return static_cast<int>(candidates.size()); }
};

inline GameInstance make_instance(const data::Dataset& ds, const data::Split& split, int class_id,
                                  int view_index) {
  GameInstance inst;
  inst.class_id = class_id;
  inst.view_index = view_index;
  inst.sender_view = &ds.sender_views.at(class_id).at(view_index);
  inst.candidates = split.candidates;
  for (int c : split.candidates) inst.receiver_views.push_back(&ds.receiver_views.at(c));
  inst.target = data::candidate_index(split.candidates, class_id);
  if (inst.target < 0) {
    throw DataError("class " + std::to_string(class_id) + " is not a candidate of split '" +
                    split.name + "'");
  }
  return inst;
}

// Object uniform over the split's classes, then a view uniform over that
// class's image range in the split.
inline GameInstance sample_instance(const data::Dataset& ds, const data::Split& split, Rng& rng) {
  if (split.entries.empty() || split.empty()) {
    throw DataError("cannot sample from empty split '" + split.name + "'");
  }
  const auto& e = split.entries[rng() % split.entries.size()];
  const int view = e.begin + static_cast<int>(rng() % static_cast<std::uint64_t>(e.size()));
  return make_instance(ds, split, e.class_id, view);
}

// Every (class, view) of a split in entry order; used for evaluation.
inline std::vector<GameInstance> enumerate_instances(const data::Dataset& ds, const data::Split& split) {
  std::vector<GameInstance> out;
  out.reserve(static_cast<std::size_t>(split.num_views()));
  for (const auto& e : split.entries) {
    for (int v = e.begin; v < e.end; ++v) out.push_back(make_instance(ds, split, e.class_id, v));
  }
  return out;
}

// Ground-truth map s*: 1 iff the predicted candidate is the sender's object.
inline int score(const GameInstance& inst, int prediction) {
  if (prediction < 0 || prediction >= inst.num_candidates()) {
    throw UsageError("prediction " + std::to_string(prediction) + " outside candidate range [0, " +
                     std::to_string(inst.num_candidates()) + ")");
  }
  return inst.candidates[prediction] == inst.class_id ? 1 : 0;
}

}  // namespace refgame::game
