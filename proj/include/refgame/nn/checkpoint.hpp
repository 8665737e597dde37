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

// Checkpoint directory layout:
//   manifest.json  tensor names, shapes, dtype, byte offsets, frozen flags,
//                  optimizer settings, RNG state and free-form metadata
//   tensors.bin    little-endian float64; per tensor its values followed by
//                  its RMSProp accumulator, both column-major

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "refgame/core/binary_io.hpp"
#include "refgame/core/error.hpp"
#include "refgame/nn/param.hpp"
#include "refgame/nn/rmsprop.hpp"

namespace refgame::nn {

inline constexpr const char* kCheckpointFormat = "refgame-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  RmsPropConfig optimizer;
  std::string rng_state;
  std::vector<ParamTensor> tensors;
};

inline Checkpoint make_checkpoint(const ParamSet& params, const RmsPropConfig& opt,
                                  const std::string& rng_state, nlohmann::json metadata) {
  Checkpoint c;
  c.metadata = std::move(metadata);
  c.optimizer = opt;
  c.rng_state = rng_state;
  c.tensors = params.tensors();
  for (auto& t : c.tensors) t.grad.setZero();
  return c;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = kCheckpointFormat;
  manifest["version"] = kCheckpointVersion;
  manifest["metadata"] = ckpt.metadata;
  manifest["optimizer"] = {{"kind", "rmsprop"},
                           {"learning_rate", ckpt.optimizer.learning_rate},
                           {"rho", ckpt.optimizer.rho},
                           {"eps", ckpt.optimizer.eps}};
  manifest["rng_state"] = ckpt.rng_state;
  manifest["payload"] = "tensors.bin";
  io::LittleEndianWriter out(dir / "tensors.bin");
  std::size_t offset = 0;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : ckpt.tensors) {
    nlohmann::json e;
    e["name"] = t.name;
    e["shape"] = {t.rows(), t.cols()};
    e["dtype"] = "float64";
    e["frozen"] = t.frozen;
    e["values_offset"] = offset;
    for (Index k = 0; k < t.size(); ++k) out.f64(t.values(k));
    offset += 8 * static_cast<std::size_t>(t.size());
    e["opt_state_offset"] = offset;
    for (Index k = 0; k < t.size(); ++k) out.f64(t.opt_state(k));
    offset += 8 * static_cast<std::size_t>(t.size());
    tensors.push_back(std::move(e));
  }
  out.close();
  manifest["tensors"] = std::move(tensors);
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest '" + (dir / "manifest.json").string() + "': " + e.what());
  }
  if (manifest.value("format", "") != kCheckpointFormat) {
    throw DataError("'" + dir.string() + "' is not a refgame checkpoint");
  }
  Checkpoint c;
  try {
    c.metadata = manifest.at("metadata");
    const auto& opt = manifest.at("optimizer");
    c.optimizer.learning_rate = opt.at("learning_rate").get<double>();
    c.optimizer.rho = opt.at("rho").get<double>();
    c.optimizer.eps = opt.at("eps").get<double>();
    c.rng_state = manifest.at("rng_state").get<std::string>();
    const auto bytes = io::read_file(dir / manifest.at("payload").get<std::string>());
    for (const auto& e : manifest.at("tensors")) {
      ParamTensor t;
      t.name = e.at("name").get<std::string>();
      if (e.at("dtype").get<std::string>() != "float64") {
        throw DataError("tensor '" + t.name + "': unsupported dtype");
      }
      const Index rows = e.at("shape").at(0).get<Index>();
      const Index cols = e.at("shape").at(1).get<Index>();
      const auto vo = e.at("values_offset").get<std::size_t>();
      const auto so = e.at("opt_state_offset").get<std::size_t>();
      const auto n = static_cast<std::size_t>(rows * cols);
      if (vo + 8 * n > bytes.size() || so + 8 * n > bytes.size()) {
        throw DataError("tensor '" + t.name + "': payload truncated");
      }
      t.values.resize(rows, cols);
      t.opt_state.resize(rows, cols);
      t.grad = Matrix::Zero(rows, cols);
      for (std::size_t k = 0; k < n; ++k) {
        t.values(static_cast<Index>(k)) = io::f64_at(bytes, vo / 8 + k);
        t.opt_state(static_cast<Index>(k)) = io::f64_at(bytes, so / 8 + k);
      }
      t.frozen = e.value("frozen", false);
      c.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest '" + dir.string() + "': " + e.what());
  }
  return c;
}

// Copies values, optimizer state and frozen flags into a ParamSet whose
// tensor names and shapes must match exactly.
inline void restore(ParamSet& params, const Checkpoint& ckpt) {
  if (ckpt.tensors.size() != params.size()) {
    throw DimensionError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                         " tensors, model has " + std::to_string(params.size()));
  }
  for (const auto& src : ckpt.tensors) {
    const ParamId id = params.find(src.name);
    if (!id.valid()) throw DimensionError("checkpoint tensor '" + src.name + "' not in model");
    ParamTensor& dst = params[id];
    if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
      throw DimensionError("tensor '" + src.name + "': checkpoint shape " +
                           std::to_string(src.rows()) + "x" + std::to_string(src.cols()) +
                           " vs model " + std::to_string(dst.rows()) + "x" +
                           std::to_string(dst.cols()));
    }
    dst.values = src.values;
    dst.opt_state = src.opt_state;
    dst.frozen = src.frozen;
    dst.grad.setZero();
  }
}

}  // namespace refgame::nn
