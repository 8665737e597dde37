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

// Reverse-mode differentiation over a linear tape of dense primitives.
//
// A Tape records every primitive applied during one forward pass. Values are
// column-major matrices; column vectors are the common case, and a matrix with
// n columns is used to carry n objects at once (e.g. candidate embeddings).
// Parameter leaves reference the ParamSet's storage directly and their
// gradients are written into a caller-provided Gradients buffer, so many tapes
// can run concurrently against one read-only ParamSet.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "refgame/core/error.hpp"
#include "refgame/nn/param.hpp"

namespace refgame::nn {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

inline double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Bernoulli entropy in nats, on the clamped probability.
inline double bernoulli_entropy(double p) {
  const double c = clamp_prob(p);
  return -c * std::log(c) - (1.0 - c) * std::log(1.0 - c);
}

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  explicit Tape(const ParamSet& params) : params_(&params) {
    param_nodes_.assign(params.size(), -1);
  }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // ---- leaves ----

  // Leaf referencing a parameter's values; created once per tape.
  Var param(ParamId id) {
    if (!id.valid() || static_cast<std::size_t>(id.index) >= param_nodes_.size()) {
      throw UsageError("unknown parameter id");
    }
    int& slot = param_nodes_[id.index];
    if (slot < 0) {
      Node n;
      n.ref = &(*params_)[id].values;
      n.param = id.index;
      n.requires_grad = true;
      nodes_.push_back(std::move(n));
      slot = static_cast<int>(nodes_.size()) - 1;
    }
    return Var{slot};
  }

  Var constant(Matrix value) { return push_leaf(std::move(value)); }

  template <typename Derived>
  Var constant(const Eigen::MatrixBase<Derived>& value) { return push_leaf(Matrix(value)); }

  Var scalar_constant(double value) { return push_leaf(Matrix::Constant(1, 1, value)); }

  // ---- inspection ----

  const Matrix& value(Var v) const {
    const Node& n = node(v);
    return n.ref ? *n.ref : n.value;
  }

  double scalar(Var v) const {
    const Matrix& m = value(v);
    if (m.size() != 1) throw DimensionError("scalar() on non-scalar node");
    return m(0, 0);
  }

  Vector vec(Var v) const {
    const Matrix& m = value(v);
    if (m.cols() != 1) throw DimensionError("vec() on a node with more than one column");
    return m.col(0);
  }

  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::size_t num_nodes() const { return nodes_.size(); }
  const std::vector<std::string_view>& ops() const { return op_names_; }
  // Indices into ops() in the order backward() visited them.
  const std::vector<int>& backward_order() const { return backward_order_; }
  bool consumed() const { return consumed_; }

  // ---- primitives ----

  // a (m x k) * b (k x n).
  Var matmul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.rows()) {
      throw DimensionError("matmul: " + shape_str(A) + " x " + shape_str(B));
    }
    Matrix out = (B.cols() == 1) ? Matrix(A * B.col(0)) : Matrix(A * B);
    return push_op("matmul", std::move(out), {a, b}, [a, b](Tape& t, int self) {
      const Matrix& g = t.grad_of(self);
      const Matrix& A = t.value(a);
      const Matrix& B = t.value(b);
      if (t.requires_grad(a)) {
        if (g.cols() == 1) {
          t.grad_of(a.id).noalias() += g.col(0) * B.col(0).transpose();
        } else {
          t.grad_of(a.id).noalias() += g * B.transpose();
        }
      }
      if (t.requires_grad(b)) t.grad_of(b.id).noalias() += A.transpose() * g;
    });
  }

  // a^T (k x m)^T * b (k x n) -> m x n.
  Var matmul_tn(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.rows() != B.rows()) {
      throw DimensionError("matmul_tn: " + shape_str(A) + "^T x " + shape_str(B));
    }
    Matrix out = A.transpose() * B;
    return push_op("matmul_tn", std::move(out), {a, b}, [a, b](Tape& t, int self) {
      const Matrix& g = t.grad_of(self);
      if (t.requires_grad(a)) t.grad_of(a.id).noalias() += t.value(b) * g.transpose();
      if (t.requires_grad(b)) t.grad_of(b.id).noalias() += t.value(a) * g;
    });
  }

  // Elementwise a + b; a column-vector b is broadcast across a's columns.
  Var add(Var a, Var b) { return add_sub(a, b, 1.0, "add"); }
  Var sub(Var a, Var b) { return add_sub(a, b, -1.0, "sub"); }

  Var mul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require_same_shape(A, B, "mul");
    Matrix out = A.cwiseProduct(B);
    return push_op("mul", std::move(out), {a, b}, [a, b](Tape& t, int self) {
      const Matrix& g = t.grad_of(self);
      if (t.requires_grad(a)) t.grad_of(a.id) += g.cwiseProduct(t.value(b));
      if (t.requires_grad(b)) t.grad_of(b.id) += g.cwiseProduct(t.value(a));
    });
  }

  Var scale(Var a, double c) {
    Matrix out = c * value(a);
    return push_op("scale", std::move(out), {a}, [a, c](Tape& t, int self) {
      t.grad_of(a.id) += c * t.grad_of(self);
    });
  }

  // 1 - a.
  Var one_minus(Var a) {
    Matrix out = (1.0 - value(a).array()).matrix();
    return push_op("one_minus", std::move(out), {a}, [a](Tape& t, int self) {
      t.grad_of(a.id) -= t.grad_of(self);
    });
  }

  Var sigmoid(Var a) {
    Matrix out = value(a).unaryExpr([](double x) { return nn::sigmoid(x); });
    return push_op("sigmoid", std::move(out), {a}, [a](Tape& t, int self) {
      const Matrix& y = t.value(Var{self});
      t.grad_of(a.id).array() += t.grad_of(self).array() * y.array() * (1.0 - y.array());
    });
  }

  Var tanh(Var a) {
    Matrix out = value(a).array().tanh().matrix();
    return push_op("tanh", std::move(out), {a}, [a](Tape& t, int self) {
      const Matrix& y = t.value(Var{self});
      t.grad_of(a.id).array() += t.grad_of(self).array() * (1.0 - y.array().square());
    });
  }

  Var relu(Var a) {
    Matrix out = value(a).cwiseMax(0.0);
    return push_op("relu", std::move(out), {a}, [a](Tape& t, int self) {
      const Matrix& x = t.value(a);
      t.grad_of(a.id).array() += (x.array() > 0.0).select(t.grad_of(self).array(), 0.0);
    });
  }

  // Stacks blocks vertically; all blocks must have the same column count.
  Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
  }

  Var concat(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat of zero blocks");
    const Index cols = value(parts[0]).cols();
    Index rows = 0;
    for (Var p : parts) {
      if (value(p).cols() != cols) throw DimensionError("concat: column count mismatch");
      rows += value(p).rows();
    }
    Matrix out(rows, cols);
    Index r = 0;
    for (Var p : parts) {
      out.middleRows(r, value(p).rows()) = value(p);
      r += value(p).rows();
    }
    std::vector<Var> in(parts.begin(), parts.end());
    return push_op("concat", std::move(out), parts, [in](Tape& t, int self) {
      const Matrix& g = t.grad_of(self);
      Index r = 0;
      for (Var p : in) {
        const Index n = t.value(p).rows();
        if (t.requires_grad(p)) t.grad_of(p.id) += g.middleRows(r, n);
        r += n;
      }
    });
  }

  // Places column blocks side by side; all blocks must have the same rows.
  Var hstack(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("hstack of zero blocks");
    const Index rows = value(parts[0]).rows();
    Index cols = 0;
    for (Var p : parts) {
      if (value(p).rows() != rows) throw DimensionError("hstack: row count mismatch");
      cols += value(p).cols();
    }
    Matrix out(rows, cols);
    Index c = 0;
    for (Var p : parts) {
      out.middleCols(c, value(p).cols()) = value(p);
      c += value(p).cols();
    }
    std::vector<Var> in(parts.begin(), parts.end());
    return push_op("hstack", std::move(out), parts, [in](Tape& t, int self) {
      const Matrix& g = t.grad_of(self);
      Index c = 0;
      for (Var p : in) {
        const Index n = t.value(p).cols();
        if (t.requires_grad(p)) t.grad_of(p.id) += g.middleCols(c, n);
        c += n;
      }
    });
  }

  // Softmax over a column vector, computed with max subtraction.
  Var softmax(Var a) {
    const Matrix& x = value(a);
    if (x.size() == 0) throw DimensionError("softmax of empty vector");
    if (x.cols() != 1) throw DimensionError("softmax expects a column vector, got " + shape_str(x));
    const double mx = x.maxCoeff();
    Matrix e = (x.array() - mx).exp().matrix();
    e /= e.sum();
    return push_op("softmax", std::move(e), {a}, [a](Tape& t, int self) {
      const Matrix& y = t.value(Var{self});
      const Matrix& g = t.grad_of(self);
      const double dot = (g.array() * y.array()).sum();
      t.grad_of(a.id).array() += y.array() * (g.array() - dot);
    });
  }

  Var sum(Var a) {
    Matrix out = Matrix::Constant(1, 1, value(a).sum());
    return push_op("sum", std::move(out), {a}, [a](Tape& t, int self) {
      t.grad_of(a.id).array() += t.grad_of(self)(0, 0);
    });
  }

  // Element i of a column vector, as a 1x1 node.
  Var pick(Var a, Index i) {
    const Matrix& x = value(a);
    if (x.cols() != 1 || i < 0 || i >= x.rows()) {
      throw DimensionError("pick: index " + std::to_string(i) + " out of range for " + shape_str(x));
    }
    Matrix out = Matrix::Constant(1, 1, x(i, 0));
    return push_op("pick", std::move(out), {a}, [a, i](Tape& t, int self) {
      t.grad_of(a.id)(i, 0) += t.grad_of(self)(0, 0);
    });
  }

  // log of the clamped argument; zero derivative where the clamp is active.
  Var log_clamped(Var a) {
    Matrix out = value(a).unaryExpr([](double p) { return std::log(clamp_prob(p)); });
    return push_op("log_clamped", std::move(out), {a}, [a](Tape& t, int self) {
      const Matrix& x = t.value(a);
      const Matrix& g = t.grad_of(self);
      Matrix& ga = t.grad_of(a.id);
      for (Index k = 0; k < x.size(); ++k) {
        const double p = x(k);
        if (p > kProbClamp && p < 1.0 - kProbClamp) ga(k) += g(k) / p;
      }
    });
  }

  // Mean over columns -> column vector.
  Var mean_columns(Var a) {
    const Matrix& x = value(a);
    const double n = static_cast<double>(x.cols());
    Matrix out = x.rowwise().sum() / n;
    return push_op("mean_columns", std::move(out), {a}, [a, n](Tape& t, int self) {
      t.grad_of(a.id).colwise() += t.grad_of(self).col(0) / n;
    });
  }

  // sum_j log p(bit_j) under independent Bernoulli(p_j).
  Var bernoulli_log_prob(Var p, std::span<const std::uint8_t> bits) {
    const Matrix& x = value(p);
    if (x.cols() != 1 || x.rows() != static_cast<Index>(bits.size())) {
      throw DimensionError("bernoulli_log_prob: " + shape_str(x) + " vs " +
                           std::to_string(bits.size()) + " bits");
    }
    double lp = 0.0;
    for (Index j = 0; j < x.rows(); ++j) {
      lp += std::log(clamp_prob(bits[j] ? x(j, 0) : 1.0 - x(j, 0)));
    }
    std::vector<std::uint8_t> b(bits.begin(), bits.end());
    return push_op("bernoulli_log_prob", Matrix::Constant(1, 1, lp), {p},
                   [p, b = std::move(b)](Tape& t, int self) {
                     const Matrix& x = t.value(p);
                     const double g = t.grad_of(self)(0, 0);
                     Matrix& gp = t.grad_of(p.id);
                     for (Index j = 0; j < x.rows(); ++j) {
                       const double q = b[j] ? x(j, 0) : 1.0 - x(j, 0);
                       if (q > kProbClamp && q < 1.0 - kProbClamp) {
                         gp(j, 0) += b[j] ? g / q : -g / q;
                       }
                     }
                   });
  }

  // sum_j H(Bernoulli(p_j)) in nats.
  Var bernoulli_entropy(Var p) {
    const Matrix& x = value(p);
    double h = 0.0;
    for (Index k = 0; k < x.size(); ++k) h += nn::bernoulli_entropy(x(k));
    return push_op("bernoulli_entropy", Matrix::Constant(1, 1, h), {p}, [p](Tape& t, int self) {
      const Matrix& x = t.value(p);
      const double g = t.grad_of(self)(0, 0);
      Matrix& gp = t.grad_of(p.id);
      for (Index k = 0; k < x.size(); ++k) {
        const double q = x(k);
        if (q > kProbClamp && q < 1.0 - kProbClamp) gp(k) += g * std::log((1.0 - q) / q);
      }
    });
  }

  // Copies the value into a fresh leaf that blocks gradient flow.
  Var detach(Var a) { return push_leaf(Matrix(value(a))); }

  // ---- reverse pass ----

  // Accumulates seed * d(loss)/d(theta) into out for every parameter leaf.
  // A tape can be differentiated once.
  void backward(Var loss, Gradients& out, double seed = 1.0) {
    if (consumed_) throw UsageError("backward called twice on the same tape");
    if (value(loss).size() != 1) throw DimensionError("backward needs a scalar loss");
    if (out.tensors.size() != params_->size()) {
      throw DimensionError("gradient buffer does not match the tape's parameter set");
    }
    consumed_ = true;
    out_ = &out;
    for (auto& n : nodes_) {
      if (n.requires_grad && n.param < 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    }
    if (!node(loss).requires_grad) return;
    grad_of(loss.id)(0, 0) += seed;
    backward_order_.reserve(ops_.size());
    for (int k = static_cast<int>(ops_.size()) - 1; k >= 0; --k) {
      if (ops_[k].output > loss.id) continue;
      backward_order_.push_back(k);
      ops_[k].fn(*this, ops_[k].output);
    }
    out_ = nullptr;
  }

  // Convenience: accumulate straight into the ParamSet's grad fields.
  void backward(Var loss, ParamSet& params, double seed = 1.0) {
    Gradients g = params.make_gradients();
    backward(loss, g, seed);
    params.accumulate(g);
  }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    int param = -1;
    bool requires_grad = false;
  };
  using BackwardFn = std::function<void(Tape&, int)>;
  struct Op {
    int output;
    BackwardFn fn;
  };

  const Node& node(Var v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw UsageError("variable does not belong to this tape");
    }
    return nodes_[v.id];
  }

  Matrix& grad_of(int id) {
    Node& n = nodes_[id];
    return n.param >= 0 ? out_->tensors[n.param] : n.grad;
  }

  Var push_leaf(Matrix value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var push_op(std::string_view name, Matrix value, std::span<const Var> inputs, BackwardFn fn) {
    bool rg = false;
    for (Var v : inputs) rg = rg || node(v).requires_grad;
    Node n;
    n.value = std::move(value);
    n.requires_grad = rg;
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    op_names_.push_back(name);
    if (rg) {
      ops_.push_back(Op{id, std::move(fn)});
    } else {
      ops_.push_back(Op{id, [](Tape&, int) {}});
    }
    return Var{id};
  }

  Var push_op(std::string_view name, Matrix value, std::initializer_list<Var> inputs,
              BackwardFn fn) {
    return push_op(name, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                   std::move(fn));
  }

  Var add_sub(Var a, Var b, double sign, std::string_view name) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    const bool broadcast = B.cols() == 1 && A.cols() != 1 && A.rows() == B.rows();
    if (!broadcast) require_same_shape(A, B, name);
    Matrix out = A;
    if (broadcast) {
      out.colwise() += sign * B.col(0);
    } else {
      out += sign * B;
    }
    return push_op(name, std::move(out), {a, b}, [a, b, sign, broadcast](Tape& t, int self) {
      const Matrix& g = t.grad_of(self);
      if (t.requires_grad(a)) t.grad_of(a.id) += g;
      if (t.requires_grad(b)) {
        if (broadcast) {
          t.grad_of(b.id) += sign * g.rowwise().sum();
        } else {
          t.grad_of(b.id) += sign * g;
        }
      }
    });
  }

  static std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }

  static void require_same_shape(const Matrix& a, const Matrix& b, std::string_view op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw DimensionError(std::string(op) + ": shape " + shape_str(a) + " vs " + shape_str(b));
    }
  }

  const ParamSet* params_;
  std::vector<Node> nodes_;
  std::vector<Op> ops_;
  std::vector<std::string_view> op_names_;
  std::vector<int> param_nodes_;
  std::vector<int> backward_order_;
  Gradients* out_ = nullptr;
  bool consumed_ = false;
};

}  // namespace refgame::nn
