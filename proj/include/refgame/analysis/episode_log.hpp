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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgame/core/error.hpp"
#include "refgame/game/trace.hpp"
#include "refgame/nn/tape.hpp"

namespace refgame::analysis {

using Vector = Eigen::VectorXd;

// Shannon entropy in nats; 0 log 0 = 0.
inline double categorical_entropy(const Vector& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return std::max(h, 0.0);
}

inline double message_entropy(const Vector& probs) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) h += nn::bernoulli_entropy(probs(j));
  return h;
}

// Per-episode measurements. Every series has one entry per step; the
// receiver has no message at the terminal step, so its last entry is 0 and
// is skipped by the curves.
struct EpisodeLog {
  std::string split;
  int class_id = 0;
  std::string class_name;
  int num_candidates = 0;
  int target = 0;
  int length = 0;
  bool forced_stop = false;
  bool correct = false;
  int rank = 1;
  std::vector<double> prediction_entropy;
  std::vector<double> stop_prob;
  std::vector<double> sender_entropy;
  std::vector<double> receiver_entropy;
  std::vector<Vector> beliefs;
};

inline EpisodeLog episode_log(const game::EpisodeTrace& t, const std::string& split = "",
                              const std::string& class_name = "") {
  if (t.steps.empty()) throw DataError("episode has no steps");
  EpisodeLog log;
  log.split = split;
  log.class_id = t.class_id;
  log.class_name = class_name;
  log.num_candidates = t.num_candidates;
  log.target = t.target;
  log.length = t.length();
  log.forced_stop = t.forced_stop;
  log.rank = game::rank_of(t.final_belief(), t.target);
  log.correct = log.rank == 1;
  for (const auto& s : t.steps) {
    log.prediction_entropy.push_back(categorical_entropy(s.belief));
    log.stop_prob.push_back(s.stop_prob);
    log.sender_entropy.push_back(message_entropy(s.sender_probs));
    log.receiver_entropy.push_back(s.receiver_message ? message_entropy(s.receiver_probs) : 0.0);
    log.beliefs.push_back(s.belief);
  }
  return log;
}

inline EpisodeLog episode_log(const nlohmann::json& record) {
  return episode_log(game::trace_from_json(record), record.value("split", std::string()),
                     record.value("class_name", std::string()));
}

// Reads a JSON-lines episode file.
inline std::vector<EpisodeLog> read_episode_logs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open episode log " + path.string());
  std::vector<EpisodeLog> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(episode_log(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline void write_episode_logs(const std::filesystem::path& path,
                               const std::vector<game::EpisodeTrace>& traces, const std::string& split,
                               const std::vector<std::string>& class_names = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write episode log " + path.string());
  for (const auto& t : traces) {
    const std::string name =
        t.class_id < static_cast<int>(class_names.size()) ? class_names[static_cast<std::size_t>(t.class_id)] : "";
    out << game::trace_to_json(t, split, name).dump() << '\n';
  }
}

}  // namespace refgame::analysis
