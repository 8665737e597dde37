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

#include <json.hpp>

#include "refgame/core/error.hpp"

namespace refgame::agents {

enum class SenderKind { kPooled, kAttention };
enum class ReceiverKind { kPooled, kAttention };

inline std::string to_string(SenderKind k) { return k == SenderKind::kPooled ? "pooled" : "attention"; }
inline std::string to_string(ReceiverKind k) {
  return k == ReceiverKind::kPooled ? "pooled" : "attention";
}

template <typename Kind>
Kind kind_from_string(const std::string& s) {
  if (s == "pooled") return Kind::kPooled;
  if (s == "attention") return Kind::kAttention;
  throw ConfigError("unknown agent variant '" + s + "' (expected pooled or attention)");
}

// Layer sizes. Defaults are the full-scale model: 256-unit tanh sender,
// 64-unit GRU receiver, 500-unit ReLU baselines.
struct ModelConfig {
  int message_dim = 32;
  int sender_input_dim = 512;
  int receiver_input_dim = 100;
  int sender_embed_dim = 256;
  int sender_hidden = 256;
  int sender_attention_hidden = 256;
  int memory_dim = 64;
  int receiver_attention_hidden = 64;
  int baseline_hidden = 500;
  SenderKind sender = SenderKind::kPooled;
  ReceiverKind receiver = ReceiverKind::kPooled;

  void validate() const {
    auto pos = [](int v, const char* name) {
      if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
    };
    pos(message_dim, "message_dim");
    pos(sender_input_dim, "sender_input_dim");
    pos(receiver_input_dim, "receiver_input_dim");
    pos(sender_embed_dim, "sender_embed_dim");
    pos(sender_hidden, "sender_hidden");
    pos(sender_attention_hidden, "sender_attention_hidden");
    pos(memory_dim, "memory_dim");
    pos(receiver_attention_hidden, "receiver_attention_hidden");
    pos(baseline_hidden, "baseline_hidden");
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"message_dim", c.message_dim},
       {"sender_input_dim", c.sender_input_dim},
       {"receiver_input_dim", c.receiver_input_dim},
       {"sender_embed_dim", c.sender_embed_dim},
       {"sender_hidden", c.sender_hidden},
       {"sender_attention_hidden", c.sender_attention_hidden},
       {"memory_dim", c.memory_dim},
       {"receiver_attention_hidden", c.receiver_attention_hidden},
       {"baseline_hidden", c.baseline_hidden},
       {"sender", to_string(c.sender)},
       {"receiver", to_string(c.receiver)}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.message_dim = j.at("message_dim").get<int>();
  c.sender_input_dim = j.at("sender_input_dim").get<int>();
  c.receiver_input_dim = j.at("receiver_input_dim").get<int>();
  c.sender_embed_dim = j.at("sender_embed_dim").get<int>();
  c.sender_hidden = j.at("sender_hidden").get<int>();
  c.sender_attention_hidden = j.at("sender_attention_hidden").get<int>();
  c.memory_dim = j.at("memory_dim").get<int>();
  c.receiver_attention_hidden = j.at("receiver_attention_hidden").get<int>();
  c.baseline_hidden = j.at("baseline_hidden").get<int>();
  c.sender = kind_from_string<SenderKind>(j.at("sender").get<std::string>());
  c.receiver = kind_from_string<ReceiverKind>(j.at("receiver").get<std::string>());
}

}  // namespace refgame::agents
