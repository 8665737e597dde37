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

// Latent-attribute synthetic corpus.
//
// Every class owns a distinct binary attribute vector z. Sender views are a
// fixed random linear map of (2z - 1) plus isotropic Gaussian noise per view;
// the receiver view is a different fixed random map of the same latents, so
// the two modalities only meet through the attributes. "Hard pairs" are
// classes whose latents differ in exactly one attribute; all other classes sit
// at Hamming distance >= 2 from every class.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgame/core/error.hpp"
#include "refgame/core/rng.hpp"
#include "refgame/data/dataset.hpp"

namespace refgame::data {

struct SyntheticSpec {
  int n_classes = 8;
  int n_attributes = 6;
  int sender_dim = 32;
  int receiver_dim = 16;
  int views_per_class = 100;
  double noise = 0.5;
  int hard_pairs = 0;
  std::uint64_t seed = 0;
  // Sender views as region grids (for the attention sender); 1 = pooled.
  int sender_regions = 1;
  // Receiver views as one word vector per attribute instead of a single vector.
  bool receiver_word_sets = false;

  void validate() const {
    if (n_classes < 1) throw ConfigError("n_classes must be >= 1");
    if (n_attributes < 1 || n_attributes > 30) throw ConfigError("n_attributes must be in [1, 30]");
    if (static_cast<double>(n_classes) > std::ldexp(1.0, n_attributes)) {
      throw ConfigError("n_classes (" + std::to_string(n_classes) + ") exceeds 2^n_attributes (" +
                        std::to_string(1LL << n_attributes) + ")");
    }
    if (sender_dim < 1 || receiver_dim < 1) throw ConfigError("feature dimensions must be >= 1");
    if (views_per_class < 1) throw ConfigError("views_per_class must be >= 1");
    if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
    if (hard_pairs < 0 || 2 * hard_pairs > n_classes) {
      throw ConfigError("hard_pairs must be in [0, n_classes / 2]");
    }
    if (sender_regions < 1) throw ConfigError("sender_regions must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"n_classes", s.n_classes},         {"n_attributes", s.n_attributes},
       {"sender_dim", s.sender_dim},       {"receiver_dim", s.receiver_dim},
       {"views_per_class", s.views_per_class}, {"noise", s.noise},
       {"hard_pairs", s.hard_pairs},       {"seed", s.seed},
       {"sender_regions", s.sender_regions}, {"receiver_word_sets", s.receiver_word_sets}};
}

inline int hamming(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

// Fraction of attributes shared with the nearest other class.
inline std::vector<double> nearest_overlap(const std::vector<std::vector<std::uint8_t>>& latents) {
  std::vector<double> out(latents.size(), 0.0);
  if (latents.size() < 2) return out;
  const double n_attr = static_cast<double>(latents.front().size());
  for (std::size_t i = 0; i < latents.size(); ++i) {
    int best = static_cast<int>(n_attr) + 1;
    for (std::size_t j = 0; j < latents.size(); ++j) {
      if (i != j) best = std::min(best, hamming(latents[i], latents[j]));
    }
    out[i] = (n_attr - best) / n_attr;
  }
  return out;
}

struct SyntheticCorpus {
  Dataset dataset;
  std::vector<std::vector<std::uint8_t>> latents;
  std::vector<bool> in_hard_pair;
};

inline SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {0x5e7}));
  const int na = spec.n_attributes;
  auto random_latent = [&] {
    std::vector<std::uint8_t> z(static_cast<std::size_t>(na));
    for (auto& b : z) b = static_cast<std::uint8_t>(rng() & 1U);
    return z;
  };
  std::vector<std::vector<std::uint8_t>> latents;
  std::vector<bool> hard;
  auto far_from_all = [&](const std::vector<std::uint8_t>& z, int min_dist) {
    for (const auto& o : latents) {
      if (hamming(z, o) < min_dist) return false;
    }
    return true;
  };
  constexpr int kMaxTries = 100000;
  for (int p = 0; p < spec.hard_pairs; ++p) {
    bool placed = false;
    for (int tries = 0; tries < kMaxTries && !placed; ++tries) {
      auto a = random_latent();
      auto b = a;
      const auto flip = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(na));
      b[flip] ^= 1U;
      if (far_from_all(a, 2) && far_from_all(b, 2)) {
        latents.push_back(std::move(a));
        latents.push_back(std::move(b));
        hard.push_back(true);
        hard.push_back(true);
        placed = true;
      }
    }
    if (!placed) throw ConfigError("cannot place hard pair " + std::to_string(p) + " in attribute space");
  }
  constexpr int kMinEasyDistance = 2;
  while (static_cast<int>(latents.size()) < spec.n_classes) {
    bool placed = false;
    for (int tries = 0; tries < kMaxTries && !placed; ++tries) {
      auto z = random_latent();
      if (far_from_all(z, kMinEasyDistance)) {
        latents.push_back(std::move(z));
        hard.push_back(false);
        placed = true;
      }
    }
    if (!placed) {
      // Attribute space too crowded for distance-2 separation: fall back to
      // distinct latents.
      for (int tries = 0; tries < kMaxTries && !placed; ++tries) {
        auto z = random_latent();
        if (far_from_all(z, 1)) {
          latents.push_back(std::move(z));
          hard.push_back(false);
          placed = true;
        }
      }
      if (!placed) throw ConfigError("cannot place class " + std::to_string(latents.size()));
    }
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(na));
  Matrix sender_map(spec.sender_dim, na);
  for (Index k = 0; k < sender_map.size(); ++k) sender_map(k) = gauss(rng) * scale;
  // Receiver: one column per attribute value when word sets are requested.
  Matrix receiver_map(spec.receiver_dim, spec.receiver_word_sets ? 2 * na : na);
  for (Index k = 0; k < receiver_map.size(); ++k) receiver_map(k) = gauss(rng) * scale;

  auto to_float = [](double v) { return static_cast<double>(static_cast<float>(v)); };

  Dataset ds;
  ds.sender_dim = spec.sender_dim;
  ds.receiver_dim = spec.receiver_dim;
  const auto overlap = nearest_overlap(latents);
  for (int c = 0; c < spec.n_classes; ++c) {
    Eigen::VectorXd s(na);
    for (int a = 0; a < na; ++a) s(a) = latents[c][a] ? 1.0 : -1.0;
    const Eigen::VectorXd clean = sender_map * s;
    std::vector<Matrix> views;
    views.reserve(static_cast<std::size_t>(spec.views_per_class));
    for (int v = 0; v < spec.views_per_class; ++v) {
      Matrix view(spec.sender_dim, spec.sender_regions);
      for (Index r = 0; r < view.cols(); ++r) {
        for (Index i = 0; i < view.rows(); ++i) view(i, r) = to_float(clean(i) + spec.noise * gauss(rng));
      }
      views.push_back(std::move(view));
    }
    ds.sender_views.push_back(std::move(views));
    Matrix words;
    if (spec.receiver_word_sets) {
      words.resize(spec.receiver_dim, na);
      for (int a = 0; a < na; ++a) words.col(a) = receiver_map.col(2 * a + latents[c][a]);
    } else {
      words = receiver_map * s;
    }
    ds.receiver_views.push_back(words.unaryExpr(to_float));
    ds.class_names.push_back((hard[c] ? "hard_" : "easy_") + std::to_string(c));
    ds.difficulty.emplace_back(1.0 - overlap[c]);
  }
  ds.validate();
  return SyntheticCorpus{std::move(ds), std::move(latents), std::move(hard)};
}

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  return generate_synthetic_corpus(spec).dataset;
}

}  // namespace refgame::data
