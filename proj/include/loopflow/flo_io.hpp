// Copyright 2026 The loopflow Authors.
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

// Middlebury .flo files: float32 magic 202021.25 ("PIEH"), int32 width,
// int32 height, then row-major interleaved float32 (dx, dy). All values
// little-endian.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "loopflow/core.hpp"

namespace loopflow {

constexpr float kFloMagic = 202021.25f;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<std::uint8_t> flo_encode(const FlowField& flow) {
  if (!all_finite(flow)) throw DataError("flo_write: flow has non-finite values");
  std::vector<std::uint8_t> out;
  out.reserve(12 + flow.size() * 8);
  detail::put_u32(out, std::bit_cast<std::uint32_t>(kFloMagic));
  detail::put_u32(out, static_cast<std::uint32_t>(flow.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(flow.height()));
  for (const Vec2 v : flow) {
    detail::put_u32(out, std::bit_cast<std::uint32_t>(v.x));
    detail::put_u32(out, std::bit_cast<std::uint32_t>(v.y));
  }
  return out;
}

inline FlowField flo_decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) throw DataError("flo: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  const float magic = std::bit_cast<float>(detail::get_u32(bytes.data()));
  if (magic != kFloMagic) throw DataError("flo: invalid magic");
  const auto w = static_cast<std::int32_t>(detail::get_u32(bytes.data() + 4));
  const auto h = static_cast<std::int32_t>(detail::get_u32(bytes.data() + 8));
  if (w <= 0 || h <= 0) {
    throw DataError("flo: invalid dimensions " + std::to_string(w) + "x" + std::to_string(h));
  }
  const std::uint64_t need = 12 + 8ULL * static_cast<std::uint64_t>(w) * static_cast<std::uint64_t>(h);
  if (bytes.size() < need) {
    throw DataError("flo: truncated payload (" + std::to_string(bytes.size()) + " of " + std::to_string(need) +
                    " bytes)");
  }
  FlowField flow(GridDims{h, w});
  const std::uint8_t* p = bytes.data() + 12;
  for (std::size_t i = 0; i < flow.size(); ++i, p += 8) {
    flow[i] = Vec2{std::bit_cast<float>(detail::get_u32(p)), std::bit_cast<float>(detail::get_u32(p + 4))};
  }
  return flow;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path);
}

inline FlowField flo_read(const std::string& path) {
  try {
    return flo_decode(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void flo_write(const std::string& path, const FlowField& flow) { write_file_bytes(path, flo_encode(flow)); }

}  // namespace loopflow
