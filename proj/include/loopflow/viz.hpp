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

#include <cmath>
#include <cstdint>
#include <numbers>

#include "loopflow/core.hpp"
#include "loopflow/image.hpp"

namespace loopflow {

// Color wheel: hue = direction, saturation = min(|f| / max_norm, 1),
// value = 1. Zero flow is white.
inline Image8 flow_to_rgb(const FlowField& flow, float max_norm) {
  if (!(max_norm > 0.0f)) throw ConfigError("flow_to_rgb: max_norm must be > 0");
  Image8 out(flow.dims(), 3);
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const Vec2 f = flow[i];
    const double sat = std::min(1.0, std::hypot(static_cast<double>(f.x), f.y) / max_norm);
    double hue = std::atan2(static_cast<double>(f.y), static_cast<double>(f.x));
    if (hue < 0.0) hue += 2.0 * std::numbers::pi;
    const double h6 = hue / (2.0 * std::numbers::pi) * 6.0;
    const int sector = static_cast<int>(std::floor(h6)) % 6;
    const double frac = h6 - std::floor(h6);
    const double p = 1.0 - sat;
    const double q = 1.0 - sat * frac;
    const double t = 1.0 - sat * (1.0 - frac);
    double r = 1, g = 1, b = 1;
    switch (sector) {
      case 0: r = 1; g = t; b = p; break;
      case 1: r = q; g = 1; b = p; break;
      case 2: r = p; g = 1; b = t; break;
      case 3: r = p; g = q; b = 1; break;
      case 4: r = t; g = p; b = 1; break;
      default: r = 1; g = p; b = q; break;
    }
    std::uint8_t* px = out.data.data() + 3 * i;
    px[0] = static_cast<std::uint8_t>(std::lround(r * 255.0));
    px[1] = static_cast<std::uint8_t>(std::lround(g * 255.0));
    px[2] = static_cast<std::uint8_t>(std::lround(b * 255.0));
  }
  return out;
}

// Mask coding: NOC 255, OCC_IN 128, OCC_OUT 0; an estimate's OCC is 0.
constexpr std::uint8_t kMaskNoc = 255;
constexpr std::uint8_t kMaskOccIn = 128;
constexpr std::uint8_t kMaskOccluded = 0;

inline Image8 occlusion_to_mask(const OcclusionMap& m) {
  Image8 out(m.dims(), 1);
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.data[i] = m[i] == Occlusion::kNoc ? kMaskNoc : m[i] == Occlusion::kOccIn ? kMaskOccIn : kMaskOccluded;
  }
  return out;
}

// Decodes a mask. 255 is NOC, 128 is OCC_IN; 0 is OCC_OUT when the pixel's
// flow (if given) leaves the frame and OCC_IN otherwise. Other values are
// rounded to the nearest code.
inline OcclusionMap mask_to_occlusion(const Image8& mask, const FlowField* flow = nullptr) {
  if (mask.channels != 1) throw DataError("occlusion mask must be single-channel");
  if (flow != nullptr) require_same_dims(mask.dims, flow->dims(), "occlusion mask vs flow");
  OcclusionMap out(mask.dims, OcclusionVariant::kGroundTruth);
  for (int y = 0; y < mask.dims.h; ++y) {
    for (int x = 0; x < mask.dims.w; ++x) {
      const std::size_t i = mask.dims.index(y, x);
      const int v = mask.data[i];
      if (v >= 192) continue;
      if (v >= 64) {
        out.set(i, Occlusion::kOccIn);
        continue;
      }
      bool leaves = false;
      if (flow != nullptr) {
        const Vec2 f = (*flow)[i];
        const int qx = static_cast<int>(std::floor(x + f.x + 0.5f));
        const int qy = static_cast<int>(std::floor(y + f.y + 0.5f));
        leaves = !mask.dims.contains(qy, qx);
      }
      out.set(i, leaves ? Occlusion::kOccOut : Occlusion::kOccIn);
    }
  }
  return out;
}

}  // namespace loopflow
