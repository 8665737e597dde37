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
#include <string>

#include "refgame/core/error.hpp"
#include "refgame/nn/param.hpp"

namespace refgame::nn {

struct RmsPropConfig {
  double learning_rate = 1e-4;
  double rho = 0.9;
  double eps = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) {
      throw ConfigError("RMSProp learning rate must be positive, got " +
                        std::to_string(learning_rate));
    }
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("RMSProp rho must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("RMSProp eps must be positive");
  }
};

// s <- rho s + (1 - rho) g^2;  theta <- theta - lr g / (sqrt(s) + eps).
// Frozen tensors are left untouched. All gradients are zeroed afterwards.
inline void rmsprop_update(ParamSet& params, const RmsPropConfig& cfg) {
  cfg.validate();
  for (auto& t : params.tensors()) {
    if (!t.frozen) {
      t.opt_state.array() = cfg.rho * t.opt_state.array() + (1.0 - cfg.rho) * t.grad.array().square();
      t.values.array() -= cfg.learning_rate * t.grad.array() / (t.opt_state.array().sqrt() + cfg.eps);
    }
    t.grad.setZero();
  }
}

}  // namespace refgame::nn
