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

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "refgame/core/error.hpp"
#include "refgame/core/rng.hpp"

namespace refgame::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct ParamId {
  int index = -1;
  bool valid() const { return index >= 0; }
  friend bool operator==(ParamId, ParamId) = default;
};

// A named parameter with its gradient accumulator and RMSProp state. All
// three arrays share the same rows x cols shape; vectors are cols == 1.
struct ParamTensor {
  std::string name;
  Matrix values;
  Matrix grad;
  Matrix opt_state;
  bool frozen = false;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  Index size() const { return values.size(); }
  std::vector<Index> shape() const {
    if (cols() == 1) return {rows()};
    return {rows(), cols()};
  }
};

// Per-tensor gradient buffers shaped like a ParamSet.
struct Gradients {
  std::vector<Matrix> tensors;

  void zero() {
    for (auto& t : tensors) t.setZero();
  }
  Matrix& operator[](ParamId id) { return tensors.at(id.index); }
  const Matrix& operator[](ParamId id) const { return tensors.at(id.index); }
};

// Owns every parameter tensor of a model. Tensors are addressed by ParamId;
// names are unique.
class ParamSet {
 public:
  ParamId add(std::string name, Index rows, Index cols = 1) {
    if (rows <= 0 || cols <= 0) {
      throw DimensionError("parameter '" + name + "' must have positive shape");
    }
    if (find(name).valid()) {
      throw UsageError("duplicate parameter name '" + name + "'");
    }
    ParamTensor t;
    t.name = std::move(name);
    t.values = Matrix::Zero(rows, cols);
    t.grad = Matrix::Zero(rows, cols);
    t.opt_state = Matrix::Zero(rows, cols);
    tensors_.push_back(std::move(t));
    return ParamId{static_cast<int>(tensors_.size()) - 1};
  }

  ParamId find(std::string_view name) const {
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      if (tensors_[i].name == name) return ParamId{static_cast<int>(i)};
    }
    return ParamId{};
  }

  ParamTensor& operator[](ParamId id) { return tensors_.at(id.index); }
  const ParamTensor& operator[](ParamId id) const { return tensors_.at(id.index); }

  std::size_t size() const { return tensors_.size(); }
  std::vector<ParamTensor>& tensors() { return tensors_; }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }

  Index num_scalars() const {
    Index n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  Gradients make_gradients() const {
    Gradients g;
    g.tensors.reserve(tensors_.size());
    for (const auto& t : tensors_) g.tensors.push_back(Matrix::Zero(t.rows(), t.cols()));
    return g;
  }

  void zero_grad() {
    for (auto& t : tensors_) t.grad.setZero();
  }

  // grad += g, tensor by tensor.
  void accumulate(const Gradients& g, double scale = 1.0) {
    if (g.tensors.size() != tensors_.size()) {
      throw DimensionError("gradient buffer does not match parameter set");
    }
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      if (scale == 1.0) {
        tensors_[i].grad += g.tensors[i];
      } else {
        tensors_[i].grad += scale * g.tensors[i];
      }
    }
  }

  // Freezes every tensor whose name starts with prefix.
  void set_frozen_prefix(std::string_view prefix, bool frozen) {
    for (auto& t : tensors_) {
      if (std::string_view(t.name).substr(0, prefix.size()) == prefix) t.frozen = frozen;
    }
  }

 private:
  std::vector<ParamTensor> tensors_;
};

// Weight matrices: uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
inline void init_xavier_uniform(ParamTensor& t, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  for (Index j = 0; j < t.cols(); ++j) {
    for (Index i = 0; i < t.rows(); ++i) t.values(i, j) = (2.0 * uniform01(rng) - 1.0) * a;
  }
}

}  // namespace refgame::nn
