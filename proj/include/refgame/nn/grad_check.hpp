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

// Compares tape gradients against central finite differences.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "refgame/core/rng.hpp"
#include "refgame/nn/param.hpp"
#include "refgame/nn/tape.hpp"

namespace refgame::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error; below it the error is absolute.
  double floor = 1e-6;
  // 0 checks every entry, otherwise a random subsample of this size.
  Index max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct TensorCheck {
  std::string name;
  Index entries_checked = 0;
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  bool passed = true;

  const TensorCheck* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& t : tensors) {
      os << (t.passed ? "  ok   " : "  FAIL ") << t.name << " max_rel=" << t.max_rel_error
         << " n=" << t.entries_checked << "\n";
    }
    return os.str();
  }
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

// loss_fn must build a scalar loss on the given tape and be a deterministic
// function of the parameter values (sampled actions frozen).
inline GradCheckReport grad_check(ParamSet& params, const std::function<Var(Tape&)>& loss_fn,
                                  const GradCheckOptions& opt = {}) {
  Gradients analytic = params.make_gradients();
  {
    Tape tape(params);
    Var loss = loss_fn(tape);
    tape.backward(loss, analytic);
  }
  auto eval = [&]() {
    Tape tape(params);
    return tape.scalar(loss_fn(tape));
  };

  Rng rng(opt.seed);
  GradCheckReport report;
  for (std::size_t ti = 0; ti < params.size(); ++ti) {
    ParamTensor& t = params.tensors()[ti];
    const Matrix& g = analytic.tensors[ti];
    std::vector<Index> entries(static_cast<std::size_t>(t.size()));
    std::iota(entries.begin(), entries.end(), Index{0});
    if (opt.max_entries_per_tensor > 0 && t.size() > opt.max_entries_per_tensor) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(static_cast<std::size_t>(opt.max_entries_per_tensor));
    }
    TensorCheck tc;
    tc.name = t.name;
    for (Index k : entries) {
      const double orig = t.values(k);
      t.values(k) = orig + opt.step;
      const double up = eval();
      t.values(k) = orig - opt.step;
      const double down = eval();
      t.values(k) = orig;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double err = relative_error(g(k), numeric, opt.floor);
      tc.max_rel_error = std::max(tc.max_rel_error, err);
      tc.max_abs_analytic = std::max(tc.max_abs_analytic, std::abs(g(k)));
      ++tc.entries_checked;
    }
    tc.passed = tc.max_rel_error <= opt.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, tc.max_rel_error);
    report.passed = report.passed && tc.passed;
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

}  // namespace refgame::nn
