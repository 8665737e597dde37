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

// On-disk dataset: <dir>/manifest.json + <dir>/payload.bin.
//
// payload.bin is little-endian float32. Per class, in class order: all sender
// views (view-major, each view region-major, each region sender_dim floats),
// then the receiver's word vectors (word-major, receiver_dim floats each).
// Offsets in the manifest count floats, not bytes.

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "refgame/core/binary_io.hpp"
#include "refgame/data/dataset.hpp"

namespace refgame::data {

inline constexpr const char* kDatasetFormat = "refgame-dataset";
inline constexpr int kDatasetVersion = 1;

inline nlohmann::json split_to_json(const Split& s) {
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& e : s.entries) {
    ranges.push_back({{"class", e.class_id}, {"begin", e.begin}, {"end", e.end}});
  }
  return {{"name", s.name}, {"candidates", s.candidates}, {"ranges", ranges}};
}

inline Split split_from_json(const nlohmann::json& j) {
  Split s;
  s.name = j.at("name").get<std::string>();
  s.candidates = j.at("candidates").get<std::vector<int>>();
  for (const auto& r : j.at("ranges")) {
    s.entries.push_back({r.at("class").get<int>(), r.at("begin").get<int>(), r.at("end").get<int>()});
  }
  return s;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);
  io::LittleEndianWriter out(dir / "payload.bin");
  nlohmann::json classes = nlohmann::json::array();
  std::size_t offset = 0;
  for (int c = 0; c < ds.num_classes(); ++c) {
    nlohmann::json e;
    e["id"] = c;
    e["name"] = ds.class_names[c];
    e["sender_views"] = ds.sender_views[c].size();
    e["sender_offset"] = offset;
    for (const auto& v : ds.sender_views[c]) {
      for (Index k = 0; k < v.size(); ++k) out.f32(v(k));
      offset += static_cast<std::size_t>(v.size());
    }
    e["receiver_words"] = ds.receiver_views[c].cols();
    e["receiver_offset"] = offset;
    for (Index k = 0; k < ds.receiver_views[c].size(); ++k) out.f32(ds.receiver_views[c](k));
    offset += static_cast<std::size_t>(ds.receiver_views[c].size());
    if (!ds.difficulty.empty() && ds.difficulty[c]) {
      e["difficulty"] = *ds.difficulty[c];
    } else {
      e["difficulty"] = nullptr;
    }
    classes.push_back(std::move(e));
  }
  out.close();
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : ds.splits) splits.push_back(split_to_json(s));
  nlohmann::json manifest = {{"format", kDatasetFormat},
                             {"version", kDatasetVersion},
                             {"sender_dim", ds.sender_dim},
                             {"sender_regions", ds.sender_regions()},
                             {"receiver_dim", ds.receiver_dim},
                             {"payload", "payload.bin"},
                             {"payload_floats", offset},
                             {"classes", classes},
                             {"splits", splits}};
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw DataError("no dataset manifest at '" + manifest_path.string() + "'");
  }
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(io::read_text(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("dataset manifest '" + manifest_path.string() + "': " + e.what());
  }
  Dataset ds;
  try {
    if (m.value("format", "") != kDatasetFormat) {
      throw DataError("'" + manifest_path.string() + "' is not a refgame dataset manifest");
    }
    ds.sender_dim = m.at("sender_dim").get<Index>();
    ds.receiver_dim = m.at("receiver_dim").get<Index>();
    const Index regions = m.value("sender_regions", Index{1});
    if (ds.sender_dim <= 0 || ds.receiver_dim <= 0 || regions <= 0) {
      throw DataError("dataset dimensions must be positive");
    }
    const auto bytes = io::read_file(dir / m.at("payload").get<std::string>());
    if (bytes.size() % 4 != 0) throw DataError("payload size is not a multiple of 4 bytes");
    const std::size_t total = bytes.size() / 4;

    const auto& classes = m.at("classes");
    std::size_t expected = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const auto& e = classes[c];
      const std::string name = e.at("name").get<std::string>();
      const std::string tag = "class " + std::to_string(c) + " ('" + name + "')";
      if (e.at("id").get<std::size_t>() != c) {
        throw DataError("missing class: manifest entry " + std::to_string(c) + " has id " +
                        std::to_string(e.at("id").get<long long>()));
      }
      const auto n_views = e.at("sender_views").get<std::size_t>();
      const auto n_words = e.at("receiver_words").get<std::size_t>();
      const auto so = e.at("sender_offset").get<std::size_t>();
      const auto ro = e.at("receiver_offset").get<std::size_t>();
      const std::size_t view_floats = static_cast<std::size_t>(ds.sender_dim * regions);
      const std::size_t sender_floats = n_views * view_floats;
      const std::size_t recv_floats = n_words * static_cast<std::size_t>(ds.receiver_dim);
      if (so != expected || ro != so + sender_floats || ro + recv_floats > total) {
        throw DataError(tag + ": payload layout does not match the declared dimensions (sender_dim " +
                        std::to_string(ds.sender_dim) + ", receiver_dim " +
                        std::to_string(ds.receiver_dim) + ")");
      }
      expected = ro + recv_floats;
      ds.class_names.push_back(name);
      std::vector<Matrix> views;
      views.reserve(n_views);
      for (std::size_t v = 0; v < n_views; ++v) {
        Matrix mat(ds.sender_dim, regions);
        for (Index k = 0; k < mat.size(); ++k) {
          mat(k) = io::f32_at(bytes, so + v * view_floats + static_cast<std::size_t>(k));
        }
        views.push_back(std::move(mat));
      }
      ds.sender_views.push_back(std::move(views));
      Matrix words(ds.receiver_dim, static_cast<Index>(n_words));
      for (Index k = 0; k < words.size(); ++k) words(k) = io::f32_at(bytes, ro + static_cast<std::size_t>(k));
      ds.receiver_views.push_back(std::move(words));
      if (e.contains("difficulty") && !e.at("difficulty").is_null()) {
        ds.difficulty.emplace_back(e.at("difficulty").get<double>());
      } else {
        ds.difficulty.emplace_back(std::nullopt);
      }
    }
    if (expected != total) {
      throw DataError("payload holds " + std::to_string(total) + " floats, manifest accounts for " +
                      std::to_string(expected));
    }
    if (std::none_of(ds.difficulty.begin(), ds.difficulty.end(),
                     [](const auto& d) { return d.has_value(); })) {
      ds.difficulty.clear();
    }
    for (const auto& s : m.at("splits")) ds.splits.push_back(split_from_json(s));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("dataset manifest '" + manifest_path.string() + "': " + e.what());
  }
  ds.validate();
  return ds;
}

}  // namespace refgame::data
