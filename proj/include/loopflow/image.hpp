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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "loopflow/core.hpp"

namespace loopflow {

// Interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
struct Image8 {
  GridDims dims{};
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(GridDims d, int c, std::uint8_t fill = 0)
      : dims(d), channels(c), data(d.size() * static_cast<std::size_t>(c), fill) {}

  std::uint8_t* px(int row, int col) { return data.data() + dims.index(row, col) * static_cast<std::size_t>(channels); }
  const std::uint8_t* px(int row, int col) const {
    return data.data() + dims.index(row, col) * static_cast<std::size_t>(channels);
  }

  friend bool operator==(const Image8&, const Image8&) = default;
};

// Gray image in [0, 1]; RGB is reduced with Rec. 601 luma weights.
inline ScalarField to_scalar(const Image8& img) {
  ScalarField out(img.dims);
  for (int y = 0; y < img.dims.h; ++y) {
    for (int x = 0; x < img.dims.w; ++x) {
      const std::uint8_t* p = img.px(y, x);
      const float v = img.channels == 1 ? p[0] : 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
      out(y, x) = v / 255.0f;
    }
  }
  return out;
}

inline Image8 to_gray8(const ScalarField& f, float lo = 0.0f, float hi = 1.0f) {
  if (!(hi > lo)) throw ConfigError("to_gray8: empty value range");
  Image8 out(f.dims(), 1);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const float t = std::clamp((f[i] - lo) / (hi - lo), 0.0f, 1.0f);
    out.data[i] = static_cast<std::uint8_t>(std::lround(t * 255.0f));
  }
  return out;
}

}  // namespace loopflow
