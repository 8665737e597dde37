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

#include "refgame/core/rng.hpp"
#include "refgame/nn/param.hpp"
#include "refgame/nn/tape.hpp"

namespace refgame::nn {

enum class Activation { kSigmoid, kTanh, kRelu };

inline Var apply(Tape& tape, Activation kind, Var x) {
  switch (kind) {
    case Activation::kSigmoid:
      return tape.sigmoid(x);
    case Activation::kTanh:
      return tape.tanh(x);
    case Activation::kRelu:
      return tape.relu(x);
  }
  return x;
}

// Dense layer y = W x + b with W (out x in) and b (out). A matrix x with n
// columns is mapped column by column.
struct Linear {
  ParamId weight;
  ParamId bias;  // invalid for a bias-free map

  static Linear create(ParamSet& params, const std::string& name, Index in, Index out,
                       bool with_bias = true) {
    Linear l;
    l.weight = params.add(name + ".weight", out, in);
    if (with_bias) l.bias = params.add(name + ".bias", out);
    return l;
  }

  void init(ParamSet& params, Rng& rng) const {
    init_xavier_uniform(params[weight], rng);
    if (bias.valid()) params[bias].values.setZero();
  }

  Index in_dim(const ParamSet& params) const { return params[weight].cols(); }
  Index out_dim(const ParamSet& params) const { return params[weight].rows(); }
};

inline Var affine(Tape& tape, const ParamSet& params, ParamId weight, ParamId bias, Var x) {
  const Matrix& w = params[weight].values;
  const Matrix& xv = tape.value(x);
  if (w.cols() != xv.rows()) {
    throw DimensionError("affine: input of " + std::to_string(xv.rows()) + " rows does not fit '" +
                         params[weight].name + "' (" + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + ")");
  }
  Var y = tape.matmul(tape.param(weight), x);
  if (!bias.valid()) return y;
  if (params[bias].rows() != w.rows() || params[bias].cols() != 1) {
    throw DimensionError("affine: bias '" + params[bias].name + "' does not match weight '" +
                         params[weight].name + "'");
  }
  return tape.add(y, tape.param(bias));
}

inline Var affine(Tape& tape, const ParamSet& params, const Linear& layer, Var x) {
  return affine(tape, params, layer.weight, layer.bias, x);
}

// Gated recurrent unit. z interpolates toward the candidate:
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   h~ = tanh(Wh x + Uh (r * h) + bh)
//   h' = (1 - z) * h + z * h~
struct GruParams {
  ParamId wz, uz, bz;
  ParamId wr, ur, br;
  ParamId wh, uh, bh;

  static GruParams create(ParamSet& params, const std::string& name, Index input, Index hidden) {
    GruParams g;
    g.wz = params.add(name + ".w_z", hidden, input);
    g.uz = params.add(name + ".u_z", hidden, hidden);
    g.bz = params.add(name + ".b_z", hidden);
    g.wr = params.add(name + ".w_r", hidden, input);
    g.ur = params.add(name + ".u_r", hidden, hidden);
    g.br = params.add(name + ".b_r", hidden);
    g.wh = params.add(name + ".w_h", hidden, input);
    g.uh = params.add(name + ".u_h", hidden, hidden);
    g.bh = params.add(name + ".b_h", hidden);
    return g;
  }

  void init(ParamSet& params, Rng& rng) const {
    for (ParamId w : {wz, uz, wr, ur, wh, uh}) init_xavier_uniform(params[w], rng);
    for (ParamId b : {bz, br, bh}) params[b].values.setZero();
  }

  Index hidden(const ParamSet& params) const { return params[uz].rows(); }
  Index input(const ParamSet& params) const { return params[wz].cols(); }
};

inline Var gru_step(Tape& tape, const ParamSet& params, const GruParams& g, Var x, Var h) {
  const Index q = g.hidden(params);
  if (tape.value(h).rows() != q || tape.value(h).cols() != 1) {
    throw DimensionError("gru_step: memory has " + std::to_string(tape.value(h).rows()) +
                         " entries, cell expects " + std::to_string(q));
  }
  if (tape.value(x).rows() != g.input(params) || tape.value(x).cols() != 1) {
    throw DimensionError("gru_step: input has " + std::to_string(tape.value(x).rows()) +
                         " entries, cell expects " + std::to_string(g.input(params)));
  }
  auto gate = [&](ParamId w, ParamId u, ParamId b, Var hin) {
    return tape.add(tape.add(tape.matmul(tape.param(w), x), tape.matmul(tape.param(u), hin)),
                    tape.param(b));
  };
  Var z = tape.sigmoid(gate(g.wz, g.uz, g.bz, h));
  Var r = tape.sigmoid(gate(g.wr, g.ur, g.br, h));
  Var cand = tape.tanh(gate(g.wh, g.uh, g.bh, tape.mul(r, h)));
  return tape.add(tape.mul(tape.one_minus(z), h), tape.mul(z, cand));
}

// One-hidden-layer feedforward net: out = W2 act(W1 x + b1) + b2.
struct Mlp {
  Linear hidden;
  Linear output;
  Activation activation = Activation::kRelu;

  static Mlp create(ParamSet& params, const std::string& name, Index in, Index width, Index out,
                    Activation act) {
    Mlp m;
    m.hidden = Linear::create(params, name + ".hidden", in, width);
    m.output = Linear::create(params, name + ".out", width, out);
    m.activation = act;
    return m;
  }

  void init(ParamSet& params, Rng& rng) const {
    hidden.init(params, rng);
    output.init(params, rng);
  }

  Var forward(Tape& tape, const ParamSet& params, Var x) const {
    return affine(tape, params, output, apply(tape, activation, affine(tape, params, hidden, x)));
  }
};

}  // namespace refgame::nn
