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

// Feature providers: global (F) and local (f) descriptor maps for a frame
// pair.
//
// ORACLE reads the identity maps of a SceneRender. Its global descriptor
// of a frame-0 point on object o at lattice position (x, y) is
//
//   [ beta * onehot_K(o) | alpha * P(x, y) placed in block o | 0 ] / n
//
// with P(x, y) = (cos wx, sin wx, cos wy, sin wy) / sqrt(2), w chosen so
// that w * max(h, w) = pi / 2, and n = sqrt(alpha^2 + beta^2). A point has
// similarity 1 with itself, (beta^2 + alpha^2 (cos w dx + cos w dy) / 2) / n^2
// with another point of its object (strictly less than 1, decreasing in
// distance), and exactly 0 with points of other objects. Frame-1 pixels
// that show a hole or a point hidden in frame 0 get the "unmatched" code
// (last dimension), which is orthogonal to every frame-0 descriptor.
//
// The local descriptor is [a * onehot_K(o) | b * t] / |.| where t is a
// pseudo-random unit texture code per scene point.
//
// CENSUS and PATCH derive a single map from the grayscale image and use it
// for both the global and local roles.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "loopflow/core.hpp"
#include "loopflow/scenes.hpp"

namespace loopflow {

enum class FeatureKind { kOracle, kCensus, kPatch };

struct FeatureProviderSpec {
  FeatureKind kind = FeatureKind::kOracle;

  // ORACLE
  double alpha = 0.9;   // point identity weight
  double beta = 0.435;  // object identity weight
  bool inject_occ_in = false;
  double injection_keep = 0.1;  // share of the pixel's own code kept after injection
  int max_objects = 8;          // K, including the background
  double local_object_weight = 0.95;
  double local_texture_weight = 0.31;
  int texture_dims = 16;

  // CENSUS / PATCH
  int window = 5;
  bool zero_mean = true;  // PATCH: subtract the window mean before normalizing
};

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::kOracle: return "oracle";
    case FeatureKind::kCensus: return "census";
    case FeatureKind::kPatch: return "patch";
  }
  return "?";
}

inline void validate(const FeatureProviderSpec& s) {
  if (s.kind == FeatureKind::kOracle) {
    if (!(s.alpha > s.beta && s.beta > 0.0)) throw ConfigError("oracle features need alpha > beta > 0");
    if (s.max_objects < 1 || s.max_objects > kMaxSceneObjects) throw ConfigError("max_objects out of range");
    if (s.texture_dims < 1) throw ConfigError("texture_dims must be >= 1");
    if (!(s.local_object_weight > 0.0) || !(s.local_texture_weight >= 0.0)) {
      throw ConfigError("local descriptor weights must be positive");
    }
    if (!(s.injection_keep >= 0.0 && s.injection_keep < 1.0)) {
      throw ConfigError("injection_keep must lie in [0, 1)");
    }
  } else if (s.window < 3 || s.window % 2 == 0) {
    throw ConfigError("feature window must be odd and >= 3");
  }
}

struct FeatureSet {
  FeatureMap F0;  // global, frame 0
  FeatureMap F1;  // global, frame 1
  FeatureMap f0;  // local, frame 0
  FeatureMap f1;  // local, frame 1
};

inline int oracle_global_depth(const FeatureProviderSpec& s) { return 5 * s.max_objects + 1; }
inline int oracle_local_depth(const FeatureProviderSpec& s) { return s.max_objects + s.texture_dims; }

namespace detail {

// Writes the normalized global code of lattice point (x, y) on object o.
inline void oracle_point_code(std::span<float> out, const FeatureProviderSpec& s, GridDims dims,
                              int o, int x, int y) {
  std::fill(out.begin(), out.end(), 0.0f);
  const double omega = std::numbers::pi / (2.0 * std::max(dims.h, dims.w));
  const double n = std::sqrt(s.alpha * s.alpha + s.beta * s.beta);
  const double a = s.alpha / (std::numbers::sqrt2 * n);
  const std::size_t block = static_cast<std::size_t>(s.max_objects + 4 * o);
  out[static_cast<std::size_t>(o)] = static_cast<float>(s.beta / n);
  out[block + 0] = static_cast<float>(a * std::cos(omega * x));
  out[block + 1] = static_cast<float>(a * std::sin(omega * x));
  out[block + 2] = static_cast<float>(a * std::cos(omega * y));
  out[block + 3] = static_cast<float>(a * std::sin(omega * y));
}

inline void oracle_unmatched_code(std::span<float> out) {
  std::fill(out.begin(), out.end(), 0.0f);
  out.back() = 1.0f;
}

inline void oracle_local_code(std::span<float> out, const FeatureProviderSpec& s,
                              std::uint64_t seed, int o, std::uint64_t point) {
  std::fill(out.begin(), out.end(), 0.0f);
  std::vector<double> t(static_cast<std::size_t>(s.texture_dims));
  double sq = 0.0;
  std::uint64_t h = hash_combine(seed, point);
  for (auto& v : t) {
    h = splitmix64(h);
    v = 2.0 * hash_unit(h) - 1.0;
    sq += v * v;
  }
  const double tn = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
  const double a = s.local_object_weight;
  const double b = s.local_texture_weight;
  const double n = std::sqrt(a * a + (sq > 0.0 ? b * b : 0.0));
  out[static_cast<std::size_t>(o)] = static_cast<float>(a / n);
  for (std::size_t k = 0; k < t.size(); ++k) {
    out[static_cast<std::size_t>(s.max_objects) + k] = static_cast<float>(b * t[k] * tn / n);
  }
}

}  // namespace detail

inline FeatureSet oracle_features(const SceneRender& r, const FeatureProviderSpec& s) {
  validate(s);
  if (s.kind != FeatureKind::kOracle) throw ConfigError("oracle_features called with a non-oracle spec");
  const GridDims dims = r.frame0.dims();
  if (r.point_id0.dims() != dims || r.point_id1.dims() != dims || r.object_id0.dims() != dims ||
      r.object_id1.dims() != dims || r.gt_occlusion.dims() != dims) {
    throw DataError("render lacks identity maps for both frames");
  }
  if (r.object_count() > s.max_objects) {
    throw ConfigError("scene has " + std::to_string(r.object_count()) +
                      " objects but oracle max_objects is " + std::to_string(s.max_objects));
  }

  FeatureSet fs{FeatureMap(dims, oracle_global_depth(s)), FeatureMap(dims, oracle_global_depth(s)),
                FeatureMap(dims, oracle_local_depth(s)), FeatureMap(dims, oracle_local_depth(s))};
  const std::uint64_t tex_seed = hash_combine(r.spec.seed, 0x7e57ULL);

  for (std::size_t i = 0; i < dims.size(); ++i) {
    const ScenePoint p = point_id::decode(r.point_id0[i]);
    detail::oracle_point_code(fs.F0.at(i), s, dims, p.object, p.x, p.y);
    detail::oracle_local_code(fs.f0.at(i), s, tex_seed, p.object, r.point_id0[i]);
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const std::uint64_t id = r.point_id1[i];
    const ScenePoint p = point_id::decode(id);
    const bool seen_in_frame0 =
        !p.hole && dims.contains(p.y, p.x) && r.point_id0(p.y, p.x) == id;
    if (seen_in_frame0) {
      detail::oracle_point_code(fs.F1.at(i), s, dims, p.object, p.x, p.y);
    } else {
      detail::oracle_unmatched_code(fs.F1.at(i));
    }
    detail::oracle_local_code(fs.f1.at(i), s, tex_seed, p.object, id);
  }

  if (s.inject_occ_in) {
    // A covered pixel takes on the global descriptor of whatever covers it,
    // keeping a small share of its own code so the occluder stays the
    // unique best match.
    for (int y = 0; y < dims.h; ++y) {
      for (int x = 0; x < dims.w; ++x) {
        const std::size_t i = dims.index(y, x);
        if (r.gt_occlusion[i] != Occlusion::kOccIn) continue;
        const Vec2 f = r.gt_flow[i];
        const auto q = nearest_pixel({x + static_cast<double>(f.x), y + static_cast<double>(f.y)});
        const std::size_t qi = dims.index(q[1], q[0]);
        if (r.object_id1[qi] == r.object_id0[i]) continue;
        auto d = fs.F0.at(i);
        const auto cover = fs.F1.at(qi);
        std::vector<double> mix(d.size());
        double sq = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
          mix[k] = cover[k] + s.injection_keep * d[k];
          sq += mix[k] * mix[k];
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = static_cast<float>(mix[k] * inv);
      }
    }
  }

  fs.F0.mark_normalized();
  fs.F1.mark_normalized();
  fs.f0.mark_normalized();
  fs.f1.mark_normalized();
  return fs;
}

namespace detail {

inline void require_window_fits(const ScalarField& image, int window) {
  if (window > image.height() || window > image.width()) {
    throw DataError("feature window " + std::to_string(window) + " larger than image " +
                    to_string(image.dims()));
  }
}

inline float clamped(const ScalarField& img, int row, int col) {
  row = std::clamp(row, 0, img.height() - 1);
  col = std::clamp(col, 0, img.width() - 1);
  return img(row, col);
}

}  // namespace detail

// Sign comparisons of every window neighbor against the center, as +-1,
// unit-normalized. Borders are clamped.
inline FeatureMap census_features(const ScalarField& image, const FeatureProviderSpec& s) {
  validate(s);
  detail::require_window_fits(image, s.window);
  const int r = s.window / 2;
  const int depth = s.window * s.window - 1;
  const float v = 1.0f / std::sqrt(static_cast<float>(depth));
  FeatureMap out(image.dims(), depth);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      auto d = out.at(y, x);
      const float c = image(y, x);
      int k = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dx == 0 && dy == 0) continue;
          d[static_cast<std::size_t>(k++)] = detail::clamped(image, y + dy, x + dx) > c ? v : -v;
        }
      }
    }
  }
  out.mark_normalized();
  return out;
}

// Flattened window, optionally mean-subtracted, unit-normalized. A window
// with zero energy maps to the uniform unit vector.
inline FeatureMap patch_features(const ScalarField& image, const FeatureProviderSpec& s) {
  validate(s);
  detail::require_window_fits(image, s.window);
  const int r = s.window / 2;
  const int depth = s.window * s.window;
  const float uniform = 1.0f / std::sqrt(static_cast<float>(depth));
  FeatureMap out(image.dims(), depth);
  std::vector<double> buf(static_cast<std::size_t>(depth));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      std::size_t k = 0;
      double mean = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          buf[k] = detail::clamped(image, y + dy, x + dx);
          mean += buf[k++];
        }
      }
      mean = s.zero_mean ? mean / depth : 0.0;
      double sq = 0.0;
      for (auto& b : buf) {
        b -= mean;
        sq += b * b;
      }
      auto d = out.at(y, x);
      if (sq < 1e-18) {
        std::fill(d.begin(), d.end(), uniform);
        continue;
      }
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t j = 0; j < buf.size(); ++j) d[j] = static_cast<float>(buf[j] * inv);
    }
  }
  out.mark_normalized();
  return out;
}

// Image-based providers: one map per frame, shared by the global and local
// roles.
inline FeatureSet image_features(const ScalarField& frame0, const ScalarField& frame1,
                                 const FeatureProviderSpec& s) {
  require_same_dims(frame0.dims(), frame1.dims(), "image_features");
  FeatureSet fs;
  switch (s.kind) {
    case FeatureKind::kCensus:
      fs.F0 = census_features(frame0, s);
      fs.F1 = census_features(frame1, s);
      break;
    case FeatureKind::kPatch:
      fs.F0 = patch_features(frame0, s);
      fs.F1 = patch_features(frame1, s);
      break;
    case FeatureKind::kOracle:
      throw ConfigError("oracle features need a scene render, not images");
  }
  fs.f0 = fs.F0;
  fs.f1 = fs.F1;
  return fs;
}

}  // namespace loopflow
