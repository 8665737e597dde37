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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "refgame/core/error.hpp"
#include "refgame/core/rng.hpp"

namespace refgame::game {

// An element of the shared message space {0,1}^d.
class BinaryMessage {
 public:
  BinaryMessage() = default;
  explicit BinaryMessage(std::size_t d) : bits_(d, 0) {}
  explicit BinaryMessage(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
      if (b > 1) throw DataError("message bit must be 0 or 1, got " + std::to_string(b));
    }
  }

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool on) { bits_.at(i) = on ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  const std::vector<std::uint8_t>& vector() const { return bits_; }

  Eigen::VectorXd as_real() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(bits_.size()));
    for (std::size_t i = 0; i < bits_.size(); ++i) v(static_cast<Eigen::Index>(i)) = bits_[i];
    return v;
  }

  std::string str() const {
    std::string s;
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

  friend bool operator==(const BinaryMessage&, const BinaryMessage&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// Most likely value per coordinate; p == 0.5 decodes to 1.
inline BinaryMessage greedy_decode(const Eigen::VectorXd& probs) {
  BinaryMessage m(static_cast<std::size_t>(probs.size()));
  for (Eigen::Index j = 0; j < probs.size(); ++j) m.set(static_cast<std::size_t>(j), probs(j) >= 0.5);
  return m;
}

inline BinaryMessage sample_message(const Eigen::VectorXd& probs, Rng& rng) {
  BinaryMessage m(static_cast<std::size_t>(probs.size()));
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    m.set(static_cast<std::size_t>(j), uniform01(rng) < probs(j));
  }
  return m;
}

}  // namespace refgame::game
