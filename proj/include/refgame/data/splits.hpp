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

#include <set>
#include <string>
#include <vector>

#include "refgame/core/error.hpp"
#include "refgame/data/dataset.hpp"

namespace refgame::data {

inline constexpr const char* kTrainSplit = "train";
inline constexpr const char* kValidSplit = "val";
inline constexpr const char* kTestSplit = "test";
inline constexpr const char* kOutOfDomainSplit = "ood";
inline constexpr const char* kTransferSplit = "transfer";

// Images per class for each split. In-domain classes use the first
// train + val + test images; held-out classes use their first `held_out`.
struct SplitCounts {
  int train = 550;
  int val = 50;
  int test = 20;
  int held_out = 100;
};

// Builds train/val/test over in-domain classes plus out-of-domain and
// transfer test splits. Held-out candidate sets always include the
// in-domain classes. Warnings (e.g. an empty held-out split) are appended to
// `warnings` when given.
inline Dataset make_splits(Dataset ds, const std::vector<int>& in_domain,
                           const std::vector<int>& out_of_domain, const std::vector<int>& transfer,
                           const SplitCounts& counts, std::vector<std::string>* warnings = nullptr) {
  std::set<int> seen;
  auto claim = [&](const std::vector<int>& list, const char* what) {
    for (int c : list) {
      if (c < 0 || c >= ds.num_classes()) {
        throw DataError(std::string(what) + " list references missing class " + std::to_string(c));
      }
      if (!seen.insert(c).second) {
        throw DataError("class " + std::to_string(c) + " appears in more than one class list");
      }
    }
  };
  claim(in_domain, "in-domain");
  claim(out_of_domain, "out-of-domain");
  claim(transfer, "transfer");
  if (counts.train < 1) throw DataError("train count must be >= 1");
  if (counts.val < 0 || counts.test < 0 || counts.held_out < 0) {
    throw DataError("split counts must be nonnegative");
  }

  auto need = [&](int c, int n) {
    if (static_cast<int>(ds.sender_views[c].size()) < n) {
      throw DataError("class " + std::to_string(c) + " has " +
                      std::to_string(ds.sender_views[c].size()) + " views, split needs " +
                      std::to_string(n));
    }
  };

  ds.splits.clear();
  Split train{kTrainSplit, {}, in_domain};
  Split val{kValidSplit, {}, in_domain};
  Split test{kTestSplit, {}, in_domain};
  for (int c : in_domain) {
    need(c, counts.train + counts.val + counts.test);
    train.entries.push_back({c, 0, counts.train});
    if (counts.val > 0) val.entries.push_back({c, counts.train, counts.train + counts.val});
    if (counts.test > 0) {
      test.entries.push_back({c, counts.train + counts.val, counts.train + counts.val + counts.test});
    }
  }
  auto held_out = [&](const char* name, const std::vector<int>& classes) {
    Split s{name, {}, in_domain};
    for (int c : classes) {
      s.candidates.push_back(c);
      if (counts.held_out > 0) {
        need(c, counts.held_out);
        s.entries.push_back({c, 0, counts.held_out});
      }
    }
    if (s.empty() && warnings) {
      warnings->push_back(std::string("split '") + name + "' is empty: no classes held out");
    }
    return s;
  };
  ds.splits.push_back(std::move(train));
  ds.splits.push_back(std::move(val));
  ds.splits.push_back(std::move(test));
  ds.splits.push_back(held_out(kOutOfDomainSplit, out_of_domain));
  ds.splits.push_back(held_out(kTransferSplit, transfer));
  ds.validate();
  return ds;
}

// accuracy@K cutoff: 10% of the candidate count, rounded up, at least 1.
inline int default_k(int num_candidates) { return std::max(1, (num_candidates + 9) / 10); }

}  // namespace refgame::data
