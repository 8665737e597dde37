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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "refgame/core/error.hpp"
#include "refgame/game/message.hpp"

namespace refgame::game {

using Vector = Eigen::VectorXd;

// Everything the receiver and sender did at one step t.
struct StepRecord {
  BinaryMessage sender_message;   // m_s^t
  Vector sender_probs;            // p(m_{s,j}^t = 1)
  double stop_prob = 0.0;         // p(s^t = 1)
  bool stop = false;              // sampled / greedy s^t
  Vector belief;                  // p(o_r = 1) over candidates
  Vector memory;                  // h_r^t
  // Receiver reply m_r^t; absent at the terminal step.
  std::optional<BinaryMessage> receiver_message;
  Vector receiver_probs;
};

struct EpisodeTrace {
  int class_id = 0;
  int view_index = 0;
  int target = 0;           // index of the true object in the candidate list
  int num_candidates = 0;
  BinaryMessage initial_message;   // m_r^0
  Vector initial_message_probs;
  std::vector<StepRecord> steps;
  int prediction = 0;       // argmax of the final belief
  int reward = 0;           // s*(o_s, prediction)
  bool forced_stop = false; // T_max reached; the stop bit had no effect

  int length() const { return static_cast<int>(steps.size()); }
  const Vector& final_belief() const { return steps.back().belief; }
};

// Argmax with ties toward the lowest index.
inline int argmax_lowest(const Vector& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

// 1-based rank of `index` under descending values, ties toward lower index.
inline int rank_of(const Vector& v, int index) {
  int rank = 1;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j == index) continue;
    if (v(j) > v(index) || (v(j) == v(index) && j < index)) ++rank;
  }
  return rank;
}

namespace detail {

inline nlohmann::json vec_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vector json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<int> bits_json(const BinaryMessage& m) {
  return std::vector<int>(m.vector().begin(), m.vector().end());
}

inline BinaryMessage json_bits(const nlohmann::json& j) {
  std::vector<std::uint8_t> b;
  for (const auto& x : j) b.push_back(static_cast<std::uint8_t>(x.get<int>()));
  return BinaryMessage(std::move(b));
}

}  // namespace detail

// One JSON-lines record. `split` and `class_name` are context the trace does
// not carry itself; they are written when non-empty.
inline nlohmann::json trace_to_json(const EpisodeTrace& t, const std::string& split = "",
                                    const std::string& class_name = "") {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    nlohmann::json j = {{"sender_bits", detail::bits_json(s.sender_message)},
                        {"sender_probs", detail::vec_json(s.sender_probs)},
                        {"stop_prob", s.stop_prob},
                        {"stop", s.stop},
                        {"belief", detail::vec_json(s.belief)},
                        {"memory", detail::vec_json(s.memory)}};
    if (s.receiver_message) {
      j["receiver_bits"] = detail::bits_json(*s.receiver_message);
      j["receiver_probs"] = detail::vec_json(s.receiver_probs);
    }
    steps.push_back(std::move(j));
  }
  nlohmann::json out;
  if (!split.empty()) out["split"] = split;
  out["class_id"] = t.class_id;
  if (!class_name.empty()) out["class_name"] = class_name;
  out["view_index"] = t.view_index;
  out["target"] = t.target;
  out["num_candidates"] = t.num_candidates;
  out["length"] = t.length();
  out["forced_stop"] = t.forced_stop;
  out["prediction"] = t.prediction;
  out["reward"] = t.reward;
  out["initial_bits"] = detail::bits_json(t.initial_message);
  out["initial_probs"] = detail::vec_json(t.initial_message_probs);
  out["steps"] = std::move(steps);
  return out;
}

inline EpisodeTrace trace_from_json(const nlohmann::json& j) {
  try {
    EpisodeTrace t;
    t.class_id = j.at("class_id").get<int>();
    t.view_index = j.value("view_index", 0);
    t.target = j.at("target").get<int>();
    t.num_candidates = j.at("num_candidates").get<int>();
    t.forced_stop = j.at("forced_stop").get<bool>();
    t.prediction = j.at("prediction").get<int>();
    t.reward = j.at("reward").get<int>();
    t.initial_message = detail::json_bits(j.at("initial_bits"));
    t.initial_message_probs = detail::json_vec(j.at("initial_probs"));
    for (const auto& s : j.at("steps")) {
      StepRecord r;
      r.sender_message = detail::json_bits(s.at("sender_bits"));
      r.sender_probs = detail::json_vec(s.at("sender_probs"));
      r.stop_prob = s.at("stop_prob").get<double>();
      r.stop = s.at("stop").get<bool>();
      r.belief = detail::json_vec(s.at("belief"));
      r.memory = detail::json_vec(s.at("memory"));
      if (s.contains("receiver_bits")) {
        r.receiver_message = detail::json_bits(s.at("receiver_bits"));
        r.receiver_probs = detail::json_vec(s.at("receiver_probs"));
      }
      t.steps.push_back(std::move(r));
    }
    if (t.steps.empty()) throw DataError("episode record has no steps");
    if (j.contains("length") && j.at("length").get<int>() != t.length()) {
      throw DataError("episode record length disagrees with its step list");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed episode record: ") + e.what());
  }
}

}  // namespace refgame::game
