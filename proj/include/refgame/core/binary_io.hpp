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

// Little-endian raw float payloads.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "refgame/core/error.hpp"

namespace refgame::io {

template <typename UInt>
UInt to_little_endian(UInt v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    UInt out = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      out = static_cast<UInt>((out << 8) | ((v >> (8 * i)) & 0xff));
    }
    return out;
  }
}

class LittleEndianWriter {
 public:
  explicit LittleEndianWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot open '" + path.string() + "' for writing");
  }

  void f32(double v) { put(to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(v)))); }
  void f64(double v) { put(to_little_endian(std::bit_cast<std::uint64_t>(v))); }

  void close() {
    out_.close();
    if (!out_) throw DataError("failed writing '" + path_.string() + "'");
  }

 private:
  template <typename UInt>
  void put(UInt v) {
    std::array<char, sizeof(UInt)> buf;
    std::memcpy(buf.data(), &v, sizeof(UInt));
    out_.write(buf.data(), buf.size());
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<char> bytes(size);
  in.seekg(0);
  in.read(bytes.data(), static_cast<std::streamsize>(size));
  if (!in) throw DataError("failed reading '" + path.string() + "'");
  return bytes;
}

inline double f32_at(const std::vector<char>& bytes, std::size_t index) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + 4 * index, 4);
  return static_cast<double>(std::bit_cast<float>(to_little_endian(v)));
}

inline double f64_at(const std::vector<char>& bytes, std::size_t index) {
  std::uint64_t v;
  std::memcpy(&v, bytes.data() + 8 * index, 8);
  return std::bit_cast<double>(to_little_endian(v));
}

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

// FNV-1a over a byte range; used for payload checksums.
inline std::uint64_t fnv1a(const std::vector<char>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace refgame::io
