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

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "refgame/core/error.hpp"

namespace refgame::data {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Half-open range [begin, end) of one class's sender-view indices.
struct SplitEntry {
  int class_id = 0;
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  friend bool operator==(const SplitEntry&, const SplitEntry&) = default;
};

// A named partition. `candidates` is the receiver's candidate set O_R for
// episodes drawn from this split; it always contains every class in entries.
struct Split {
  std::string name;
  std::vector<SplitEntry> entries;
  std::vector<int> candidates;

  int num_views() const {
    int n = 0;
    for (const auto& e : entries) n += e.size();
    return n;
  }
  bool empty() const { return num_views() == 0; }
  friend bool operator==(const Split&, const Split&) = default;
};

// Objects O with their sender views O_S and receiver views O_R.
//
// A sender view is a (sender_dim x regions) matrix: regions == 1 for pooled
// image features, 64 for a spatial feature grid. A receiver view is a
// (receiver_dim x words) matrix of word vectors; pooled receivers use its mean.
struct Dataset {
  Index sender_dim = 0;
  Index receiver_dim = 0;
  std::vector<std::string> class_names;
  std::vector<std::vector<Matrix>> sender_views;
  std::vector<Matrix> receiver_views;
  // Optional per-class score used by the length analysis. Higher means
  // easier (an F1-style score): the synthetic generator emits
  // 1 - (attribute overlap with the nearest other class).
  std::vector<std::optional<double>> difficulty;
  std::vector<Split> splits;

  int num_classes() const { return static_cast<int>(class_names.size()); }

  Index sender_regions() const {
    for (const auto& views : sender_views) {
      if (!views.empty()) return views.front().cols();
    }
    return 1;
  }

  bool has_split(const std::string& name) const {
    return std::any_of(splits.begin(), splits.end(),
                       [&](const Split& s) { return s.name == name; });
  }

  const Split& split(const std::string& name) const {
    for (const auto& s : splits) {
      if (s.name == name) return s;
    }
    throw DataError("dataset has no split named '" + name + "'");
  }

  bool has_difficulty() const {
    return !difficulty.empty() &&
           std::all_of(difficulty.begin(), difficulty.end(), [](const auto& d) { return d.has_value(); });
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

  // Throws DataError naming the first violated invariant.
  void validate() const {
    const int n = num_classes();
    if (n == 0) throw DataError("dataset has no classes");
    if (sender_dim <= 0 || receiver_dim <= 0) throw DataError("feature dimensions must be positive");
    if (static_cast<int>(sender_views.size()) != n || static_cast<int>(receiver_views.size()) != n) {
      throw DataError("view tables do not cover all " + std::to_string(n) + " classes");
    }
    if (!difficulty.empty() && static_cast<int>(difficulty.size()) != n) {
      throw DataError("difficulty column does not cover all classes");
    }
    const Index regions = sender_regions();
    for (int c = 0; c < n; ++c) {
      const std::string cls = "class " + std::to_string(c) + " ('" + class_names[c] + "')";
      if (sender_views[c].empty()) throw DataError(cls + " has no sender views");
      for (const auto& v : sender_views[c]) {
        if (v.rows() != sender_dim) {
          throw DataError(cls + ": sender view has dimension " + std::to_string(v.rows()) +
                          ", dataset declares " + std::to_string(sender_dim));
        }
        if (v.cols() != regions) throw DataError(cls + ": inconsistent sender region count");
      }
      if (receiver_views[c].rows() != receiver_dim) {
        throw DataError(cls + ": receiver view has dimension " +
                        std::to_string(receiver_views[c].rows()) + ", dataset declares " +
                        std::to_string(receiver_dim));
      }
      if (receiver_views[c].cols() < 1) throw DataError(cls + ": receiver view has no word vectors");
    }
    std::set<std::string> names;
    // Per class, all ranges claimed so far by any split.
    std::vector<std::vector<std::pair<int, int>>> claimed(static_cast<std::size_t>(n));
    for (const auto& s : splits) {
      if (!names.insert(s.name).second) throw DataError("duplicate split '" + s.name + "'");
      std::set<int> cand;
      for (int c : s.candidates) {
        if (c < 0 || c >= n) {
          throw DataError("split '" + s.name + "' references missing class " + std::to_string(c));
        }
        if (!cand.insert(c).second) {
          throw DataError("split '" + s.name + "' lists candidate " + std::to_string(c) + " twice");
        }
      }
      for (const auto& e : s.entries) {
        if (e.class_id < 0 || e.class_id >= n) {
          throw DataError("split '" + s.name + "' references missing class " +
                          std::to_string(e.class_id));
        }
        const int nv = static_cast<int>(sender_views[e.class_id].size());
        if (e.begin < 0 || e.end > nv || e.begin >= e.end) {
          throw DataError("split '" + s.name + "': range [" + std::to_string(e.begin) + ", " +
                          std::to_string(e.end) + ") invalid for class " +
                          std::to_string(e.class_id) + " with " + std::to_string(nv) + " views");
        }
        if (!cand.count(e.class_id)) {
          throw DataError("split '" + s.name + "': class " + std::to_string(e.class_id) +
                          " is not among its candidates");
        }
        for (const auto& [b, en] : claimed[e.class_id]) {
          if (e.begin < en && b < e.end) {
            throw DataError("split '" + s.name + "' overlaps another split's images of class " +
                            std::to_string(e.class_id));
          }
        }
        claimed[e.class_id].emplace_back(e.begin, e.end);
      }
    }
  }
};

// Position of class_id within a candidate list, or -1.
inline int candidate_index(const std::vector<int>& candidates, int class_id) {
  auto it = std::find(candidates.begin(), candidates.end(), class_id);
  return it == candidates.end() ? -1 : static_cast<int>(it - candidates.begin());
}

}  // namespace refgame::data
