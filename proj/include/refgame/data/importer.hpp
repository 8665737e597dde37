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

// Text importers for precomputed upstream artifacts:
//   descriptions: "class_name<TAB>token token ..." one line per class
//                 (already lowercased and stopword-filtered)
//   embeddings:   "token v1 ... vD" one line per token
//   features:     "class_name<TAB>v1 ... vD" one line per image

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "refgame/core/error.hpp"
#include "refgame/data/dataset.hpp"

namespace refgame::data {

using EmbeddingTable = std::unordered_map<std::string, Eigen::VectorXd>;

namespace detail {

inline std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

inline std::vector<double> parse_reals(std::istringstream& is, const std::string& where) {
  std::vector<double> v;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError(where + ": '" + tok + "' is not a number");
    }
  }
  return v;
}

inline std::pair<std::string, std::string> split_tab(const std::string& line, const std::string& where) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos) throw DataError(where + ": expected '<name>\\t<fields>'");
  return {line.substr(0, tab), line.substr(tab + 1)};
}

}  // namespace detail

inline EmbeddingTable read_embedding_table(const std::filesystem::path& path) {
  auto in = detail::open_text(path);
  EmbeddingTable table;
  std::string line;
  Index dim = -1;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string token;
    is >> token;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto vals = detail::parse_reals(is, where);
    if (dim < 0) dim = static_cast<Index>(vals.size());
    if (static_cast<Index>(vals.size()) != dim || dim == 0) {
      throw DataError(where + ": embedding has " + std::to_string(vals.size()) +
                      " components, expected " + std::to_string(dim));
    }
    table[token] = Eigen::Map<const Eigen::VectorXd>(vals.data(), dim);
  }
  if (table.empty()) throw DataError("embedding table '" + path.string() + "' is empty");
  return table;
}

struct Description {
  std::string class_name;
  std::vector<std::string> tokens;
};

inline std::vector<Description> read_descriptions(const std::filesystem::path& path) {
  auto in = detail::open_text(path);
  std::vector<Description> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    auto [name, rest] = detail::split_tab(line, path.string() + ":" + std::to_string(lineno));
    Description d{name, {}};
    std::istringstream is(rest);
    std::string tok;
    while (is >> tok) d.tokens.push_back(tok);
    out.push_back(std::move(d));
  }
  return out;
}

// Bag of unique words: duplicates dropped (first occurrence kept), tokens
// missing from the table skipped. Returns one column per word, or their mean
// when mean_pool is set.
inline Matrix bag_of_words(const Description& d, const EmbeddingTable& table, bool mean_pool) {
  std::set<std::string> seen;
  std::vector<const Eigen::VectorXd*> vecs;
  for (const auto& t : d.tokens) {
    if (!seen.insert(t).second) continue;
    auto it = table.find(t);
    if (it != table.end()) vecs.push_back(&it->second);
  }
  if (vecs.empty()) {
    throw DataError("description of '" + d.class_name + "' has no token in the embedding table");
  }
  const Index dim = vecs.front()->size();
  Matrix words(dim, static_cast<Index>(vecs.size()));
  for (std::size_t i = 0; i < vecs.size(); ++i) words.col(static_cast<Index>(i)) = *vecs[i];
  if (!mean_pool) return words;
  return words.rowwise().mean();
}

inline std::map<std::string, std::vector<Matrix>> read_features(const std::filesystem::path& path) {
  auto in = detail::open_text(path);
  std::map<std::string, std::vector<Matrix>> out;
  std::string line;
  Index dim = -1;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    auto [name, rest] = detail::split_tab(line, where);
    std::istringstream is(rest);
    const auto vals = detail::parse_reals(is, where);
    if (dim < 0) dim = static_cast<Index>(vals.size());
    if (static_cast<Index>(vals.size()) != dim || dim == 0) {
      throw DataError(where + ": feature vector of class '" + name + "' has " +
                      std::to_string(vals.size()) + " components, expected " + std::to_string(dim));
    }
    Matrix m(dim, 1);
    for (Index k = 0; k < dim; ++k) m(k, 0) = static_cast<double>(static_cast<float>(vals[k]));
    out[name].push_back(std::move(m));
  }
  return out;
}

// Assembles a split-less Dataset; classes follow the description file order.
inline Dataset import_dataset(const std::filesystem::path& features,
                              const std::filesystem::path& descriptions,
                              const std::filesystem::path& embeddings, bool word_sets) {
  const auto table = read_embedding_table(embeddings);
  const auto descs = read_descriptions(descriptions);
  auto feats = read_features(features);
  Dataset ds;
  for (const auto& d : descs) {
    auto it = feats.find(d.class_name);
    if (it == feats.end()) throw DataError("missing class: no features for '" + d.class_name + "'");
    ds.class_names.push_back(d.class_name);
    ds.sender_views.push_back(std::move(it->second));
    feats.erase(it);
    Matrix words = bag_of_words(d, table, !word_sets);
    ds.receiver_views.push_back(words.unaryExpr([](double v) {
      return static_cast<double>(static_cast<float>(v));
    }));
  }
  if (!feats.empty()) {
    throw DataError("missing class: features for '" + feats.begin()->first + "' have no description");
  }
  if (ds.class_names.empty()) throw DataError("no classes imported");
  ds.sender_dim = ds.sender_views.front().front().rows();
  ds.receiver_dim = ds.receiver_views.front().rows();
  ds.validate();
  return ds;
}

}  // namespace refgame::data
