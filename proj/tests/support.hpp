#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopflow.hpp"

namespace loopflow::testing {

constexpr std::uint64_t kSuiteSeed = 7;

inline const std::vector<SceneRender>& suite_renders() {
  static const std::vector<SceneRender> renders = [] {
    std::vector<SceneRender> out;
    for (const auto& s : standard_suite(kSuiteSeed)) out.push_back(render(s));
    return out;
  }();
  return renders;
}

inline const SceneRender& suite_scene(const std::string& name) {
  for (const auto& r : suite_renders()) {
    if (r.spec.name == name) return r;
  }
  throw std::out_of_range(name);
}

// p -> R(theta)(p - c) + c + t, sampled at pixel centers.
inline FlowField rigid_flow(GridDims dims, double theta, double cx, double cy, double tx = 0.0, double ty = 0.0) {
  FlowField f(dims);
  const double c = std::cos(theta), s = std::sin(theta);
  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double qx = c * dx - s * dy + cx + tx;
      const double qy = s * dx + c * dy + cy + ty;
      f(y, x) = Vec2{static_cast<float>(qx - x), static_cast<float>(qy - y)};
    }
  }
  return f;
}

inline FlowField random_flow(std::mt19937_64& rng, GridDims dims, float scale) {
  std::uniform_real_distribution<float> u(-scale, scale);
  FlowField f(dims);
  for (auto& v : f) v = Vec2{u(rng), u(rng)};
  return f;
}

inline bool bit_equal(Vec2 a, Vec2 b) {
  return std::bit_cast<std::uint32_t>(a.x) == std::bit_cast<std::uint32_t>(b.x) &&
         std::bit_cast<std::uint32_t>(a.y) == std::bit_cast<std::uint32_t>(b.y);
}

}  // namespace loopflow::testing
