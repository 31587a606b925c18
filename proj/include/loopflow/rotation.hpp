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
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "loopflow/core.hpp"
#include "loopflow/loopback.hpp"

namespace loopflow {

// p' = R(theta) p + translation. When not degenerate, center is the fixed
// point (I - R)^-1 translation.
struct RigidMotion2D {
  double theta = 0.0;
  std::optional<Point2d> center;
  Point2d translation{};
  double residual = 0.0;  // RMS, pixels
  bool degenerate = true;
  int support = 0;  // correspondences used

  Point2d apply(Point2d p) const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y};
  }
  Vec2 displacement_at(Point2d p) const {
    const Point2d q = apply(p);
    return Vec2{static_cast<float>(q.x - p.x), static_cast<float>(q.y - p.y)};
  }
};

// Least-squares rotation + translation taking src[i] to dst[i].
inline RigidMotion2D fit_rigid_points(const std::vector<Point2d>& src, const std::vector<Point2d>& dst,
                                      double theta_min) {
  RigidMotion2D m;
  m.support = static_cast<int>(src.size());
  if (src.empty()) {
    m.residual = std::numeric_limits<double>::infinity();
    return m;
  }
  const double n = static_cast<double>(src.size());
  Point2d ps{}, qs{};
  for (std::size_t i = 0; i < src.size(); ++i) {
    ps = ps + src[i];
    qs = qs + dst[i];
  }
  ps = (1.0 / n) * ps;
  qs = (1.0 / n) * qs;
  double sxx = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Point2d a = src[i] - ps;
    const Point2d b = dst[i] - qs;
    sxx += a.x * b.x + a.y * b.y;
    cross += a.x * b.y - a.y * b.x;
  }
  m.theta = src.size() >= 2 ? std::atan2(cross, sxx) : 0.0;
  const double c = std::cos(m.theta);
  const double s = std::sin(m.theta);
  m.translation = {qs.x - (c * ps.x - s * ps.y), qs.y - (s * ps.x + c * ps.y)};
  double sq = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Point2d e = m.apply(src[i]) - dst[i];
    sq += e.x * e.x + e.y * e.y;
  }
  m.residual = std::sqrt(sq / n);
  m.degenerate = src.size() < 2 || std::abs(m.theta) < theta_min;
  if (!m.degenerate) {
    // (I - R) = [[1-c, s], [-s, 1-c]]; det = (1-c)^2 + s^2.
    const double det = (1.0 - c) * (1.0 - c) + s * s;
    const Point2d t = m.translation;
    m.center = Point2d{((1.0 - c) * t.x - s * t.y) / det, (s * t.x + (1.0 - c) * t.y) / det};
  }
  return m;
}

// Fits the motion of the window_k x window_k neighborhood of `anchor`
// (rounded to the nearest pixel), mapping p to p + flow(p). Pixels with a
// zero in `mask` are skipped.
inline RigidMotion2D fit_rigid_motion(const FlowField& flow, Vec2 anchor, int window_k,
                                      double theta_min = 1e-3, const MaskField* mask = nullptr) {
  if (window_k < 3 || window_k % 2 == 0) throw ConfigError("window_k must be odd and >= 3");
  if (mask != nullptr) require_same_dims(mask->dims(), flow.dims(), "fit_rigid_motion mask");
  const GridDims dims = flow.dims();
  const int ax = static_cast<int>(std::floor(anchor.x + 0.5f));
  const int ay = static_cast<int>(std::floor(anchor.y + 0.5f));
  const int r = window_k / 2;
  const int x0 = std::max(0, ax - r), x1 = std::min(dims.w - 1, ax + r);
  const int y0 = std::max(0, ay - r), y1 = std::min(dims.h - 1, ay + r);
  if (x0 > x1 || y0 > y1) throw DataError("fit window lies entirely outside the frame");
  std::vector<Point2d> src, dst;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (mask != nullptr && (*mask)(y, x) == 0) continue;
      const Vec2 f = flow(y, x);
      src.push_back({static_cast<double>(x), static_cast<double>(y)});
      dst.push_back({x + static_cast<double>(f.x), y + static_cast<double>(f.y)});
    }
  }
  return fit_rigid_points(src, dst, theta_min);
}

enum class DistanceMode { kNone, kEuclidean, kUniformLaw };
enum class UniformLawForm { kLiteral, kRadial };

inline double euclidean_distance(Point2d p_pre, Point2d p_ref) { return distance(p_pre, p_ref); }

// literal: | |AB| - |AO| |; radial (alternative): | |BO| - |AO| |,
// with A = p_ref, B = p_pre, O = motion.center. Empty when the motion has
// no center; the caller decides on a fallback.
inline std::optional<double> uniform_law_distance(Point2d p_pre, Point2d p_ref, const RigidMotion2D& motion,
                                                  UniformLawForm form = UniformLawForm::kLiteral) {
  if (motion.degenerate || !motion.center) return std::nullopt;
  const Point2d o = *motion.center;
  const double ao = distance(p_ref, o);
  const double other = form == UniformLawForm::kLiteral ? distance(p_ref, p_pre) : distance(p_pre, o);
  return std::abs(other - ao);
}

struct RotationParams {
  int window_k = 31;
  double theta_min = 1e-3;
  UniformLawForm form = UniformLawForm::kLiteral;
  // Fit support also requires local-descriptor similarity to the anchor of
  // at least this value, which keeps other objects out of the window.
  // Values <= -1 disable the check.
  double segment_threshold = 0.5;
};

inline void validate(const RotationParams& p) {
  if (p.window_k < 3 || p.window_k % 2 == 0) throw ConfigError("window_k must be odd and >= 3");
  if (!(p.theta_min > 0.0)) throw ConfigError("theta_min must be > 0");
}

// Per-anchor rigid fits over flow0, memoized by anchor pixel.
class RigidFitCache {
 public:
  RigidFitCache(const FlowField& flow0, RotationParams params, const OcclusionMap* occlusion = nullptr,
                const FeatureMap* local = nullptr)
      : flow0_(flow0), params_(params), occlusion_(occlusion), local_(local) {
    validate(params_);
    if (occlusion_ != nullptr) require_same_dims(occlusion_->dims(), flow0.dims(), "fit occlusion");
    if (local_ != nullptr) require_same_dims(local_->dims(), flow0.dims(), "fit features");
  }

  const RotationParams& params() const { return params_; }

  std::size_t anchor_index(Vec2 anchor) const {
    const GridDims d = flow0_.dims();
    const int ax = std::clamp(static_cast<int>(std::floor(anchor.x + 0.5f)), 0, d.w - 1);
    const int ay = std::clamp(static_cast<int>(std::floor(anchor.y + 0.5f)), 0, d.h - 1);
    return d.index(ay, ax);
  }

  const RigidMotion2D& fit(Vec2 anchor) {
    const std::size_t a = anchor_index(anchor);
    if (auto it = cache_.find(a); it != cache_.end()) return it->second;
    return cache_.emplace(a, compute(a)).first->second;
  }

  MaskField support_mask(std::size_t a) const {
    const GridDims d = flow0_.dims();
    MaskField mask(d, 1);
    const int ay = static_cast<int>(a / static_cast<std::size_t>(d.w));
    const int ax = static_cast<int>(a % static_cast<std::size_t>(d.w));
    const int r = params_.window_k / 2;
    for (int y = std::max(0, ay - r); y <= std::min(d.h - 1, ay + r); ++y) {
      for (int x = std::max(0, ax - r); x <= std::min(d.w - 1, ax + r); ++x) {
        const std::size_t i = d.index(y, x);
        bool ok = occlusion_ == nullptr || !occlusion_->occluded(i);
        if (ok && local_ != nullptr && params_.segment_threshold > -1.0) {
          ok = dot(local_->at(i), local_->at(a)) >= params_.segment_threshold;
        }
        mask[i] = ok ? 1 : 0;
      }
    }
    return mask;
  }

 private:
  RigidMotion2D compute(std::size_t a) const {
    const GridDims d = flow0_.dims();
    const MaskField mask = support_mask(a);
    const Vec2 anchor{static_cast<float>(a % static_cast<std::size_t>(d.w)),
                      static_cast<float>(a / static_cast<std::size_t>(d.w))};
    return fit_rigid_motion(flow0_, anchor, params_.window_k, params_.theta_min, &mask);
  }

  const FlowField& flow0_;
  RotationParams params_;
  const OcclusionMap* occlusion_;
  const FeatureMap* local_;
  std::unordered_map<std::size_t, RigidMotion2D> cache_;
};

// Distance from each pixel to its reference. UNIFORM_LAW anchors a rigid
// fit at the reference pixel and falls back to the Euclidean distance
// where the fit has no center.
inline ScalarField distance_field(const CorrelationPairField& pairs, DistanceMode mode, RigidFitCache& fits) {
  const GridDims dims = pairs.dims();
  ScalarField out(dims, 0.0f);
  if (mode == DistanceMode::kNone) return out;
  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const std::size_t i = dims.index(y, x);
      const Point2d b{static_cast<double>(x), static_cast<double>(y)};
      const Point2d a = to_point(pairs[i]);
      double d = euclidean_distance(b, a);
      if (mode == DistanceMode::kUniformLaw) {
        if (auto u = uniform_law_distance(b, a, fits.fit(pairs[i]), fits.params().form)) d = *u;
      }
      out[i] = static_cast<float>(d);
    }
  }
  return out;
}

inline ScalarField distance_field(const CorrelationPairField& pairs, const FlowField& flow0, DistanceMode mode,
                                  const RotationParams& params = {}, const OcclusionMap* occlusion = nullptr,
                                  const FeatureMap* local = nullptr) {
  require_same_dims(pairs.dims(), flow0.dims(), "distance_field");
  RigidFitCache fits(flow0, params, occlusion, local);
  return distance_field(pairs, mode, fits);
}

}  // namespace loopflow
