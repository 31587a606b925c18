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

// Synthetic rigid-motion scenes with exact ground truth.
//
// A scene is a static textured background (object 0) plus polygonal
// objects, each moving rigidly. Every integer lattice point inside an
// object's polygon is a scene point. Frame 0 shows, at each pixel, the
// top-z object whose support contains that pixel. Frame 1 is produced by
// forward-mapping every lattice point to its nearest landing pixel; when
// several points of one object land on the same pixel the one landing
// closest wins (ties: lowest row, then column). Frame-1 pixels that lie
// inside an object's moved polygon but receive no point are "holes" and
// carry a fresh point identity.
//
// A frame-0 pixel is NOC iff its landing pixel is in frame and frame 1
// shows exactly that point there; OCC_OUT iff the landing pixel is out of
// frame; OCC_IN otherwise.

#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "loopflow/core.hpp"

namespace loopflow {

// x' = center + R(theta) (x - center) + translation.
struct SceneMotion {
  double theta = 0.0;
  Point2d center{};
  Point2d translation{};

  Point2d apply(Point2d p) const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Point2d d = p - center;
    return {center.x + c * d.x - s * d.y + translation.x,
            center.y + s * d.x + c * d.y + translation.y};
  }

  Point2d apply_inverse(Point2d q) const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Point2d d = q - translation - center;
    return {center.x + c * d.x + s * d.y, center.y - s * d.x + c * d.y};
  }

  bool is_identity() const {
    return theta == 0.0 && translation.x == 0.0 && translation.y == 0.0;
  }
};

struct SceneObject {
  std::vector<Point2d> polygon;  // vertices in pixel coordinates
  std::uint64_t texture_seed = 0;
  int z = 1;  // higher occludes lower; background sits below everything
  SceneMotion motion{};
};

struct SceneSpec {
  std::string name;
  GridDims dims{64, 64};
  std::uint64_t background_seed = 0;
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;
};

constexpr int kMaxSceneObjects = 255;

// ---------------------------------------------------------------------------
// Hashing and point identities.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

inline double hash_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

// Packed 64-bit scene-point identity:
//   bits 56..63 object id, bit 55 hole flag, bits 0..47 payload.
// Lattice payload stores (y + 2^23) << 24 | (x + 2^23).
struct ScenePoint {
  int object = 0;
  bool hole = false;
  int x = 0;  // lattice x, or frame-1 column for holes
  int y = 0;

  friend constexpr bool operator==(const ScenePoint&, const ScenePoint&) = default;
};

namespace point_id {

constexpr std::uint64_t kHoleBit = 1ULL << 55;
constexpr std::int64_t kOffset = 1LL << 23;
constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();

inline std::uint64_t encode(const ScenePoint& p) {
  const auto ux = static_cast<std::uint64_t>(p.x + kOffset) & 0xFFFFFFULL;
  const auto uy = static_cast<std::uint64_t>(p.y + kOffset) & 0xFFFFFFULL;
  return (static_cast<std::uint64_t>(p.object) << 56) | (p.hole ? kHoleBit : 0ULL) |
         (uy << 24) | ux;
}

inline ScenePoint decode(std::uint64_t id) {
  ScenePoint p;
  p.object = static_cast<int>(id >> 56);
  p.hole = (id & kHoleBit) != 0;
  p.x = static_cast<int>(static_cast<std::int64_t>(id & 0xFFFFFFULL) - kOffset);
  p.y = static_cast<int>(static_cast<std::int64_t>((id >> 24) & 0xFFFFFFULL) - kOffset);
  return p;
}

}  // namespace point_id

struct PointIdTag {};
struct ObjectIdTag {};
using PointIdMap = Grid<std::uint64_t, PointIdTag>;
using ObjectIdMap = Grid<std::int32_t, ObjectIdTag>;

// ---------------------------------------------------------------------------
// Polygon helpers.

inline double signed_area(const std::vector<Point2d>& poly) {
  double a = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    a += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
  }
  return 0.5 * a;
}

// Crossing-number test with a half-open rule so shared edges are decided
// consistently.
inline bool point_in_polygon(const std::vector<Point2d>& poly, Point2d p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point2d a = poly[i];
    const Point2d b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xc = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

namespace detail {

inline double cross(Point2d o, Point2d a, Point2d b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool segments_intersect(Point2d p1, Point2d p2, Point2d p3, Point2d p4) {
  const double d1 = cross(p3, p4, p1);
  const double d2 = cross(p3, p4, p2);
  const double d3 = cross(p1, p2, p3);
  const double d4 = cross(p1, p2, p4);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](Point2d a, Point2d b, Point2d c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
  };
  if (d1 == 0 && on_segment(p3, p4, p1)) return true;
  if (d2 == 0 && on_segment(p3, p4, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, p3)) return true;
  if (d4 == 0 && on_segment(p1, p2, p4)) return true;
  return false;
}

}  // namespace detail

inline bool polygon_is_simple(const std::vector<Point2d>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

inline void validate(const SceneSpec& spec) {
  if (!spec.dims.valid()) throw DataError("scene dims must be >= 1x1");
  if (spec.objects.size() > kMaxSceneObjects - 1) throw DataError("too many scene objects");
  std::vector<int> zs;
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    const auto& obj = spec.objects[k];
    const std::string tag = "object " + std::to_string(k + 1);
    if (obj.polygon.size() < 3) throw DataError(tag + ": degenerate polygon (< 3 vertices)");
    for (auto v : obj.polygon) {
      if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw DataError(tag + ": non-finite vertex");
    }
    if (std::abs(signed_area(obj.polygon)) < 1e-9) throw DataError(tag + ": degenerate polygon (zero area)");
    if (!polygon_is_simple(obj.polygon)) throw DataError(tag + ": polygon is not simple");
    const double th = obj.motion.theta;
    if (!std::isfinite(th) || th <= -M_PI || th > M_PI) throw DataError(tag + ": theta outside (-pi, pi]");
    zs.push_back(obj.z);
  }
  std::sort(zs.begin(), zs.end());
  if (std::adjacent_find(zs.begin(), zs.end()) != zs.end()) throw DataError("z-orders must be distinct");
}

// ---------------------------------------------------------------------------
// Rendering.

struct SceneRender {
  SceneSpec spec;
  ScalarField frame0;
  ScalarField frame1;
  FlowField gt_flow;            // true motion of every frame-0 pixel's point
  OcclusionMap gt_occlusion;    // ground-truth variant
  PointIdMap point_id0;
  PointIdMap point_id1;
  ObjectIdMap object_id0;
  ObjectIdMap object_id1;
  CoordField origin1;           // frame-0 position of the point shown in frame 1 (sub-pixel)
  std::vector<SceneMotion> motions;  // indexed by object id; 0 = background

  int object_count() const { return static_cast<int>(motions.size()); }
};

inline std::uint64_t object_texture_seed(const SceneSpec& spec, int object) {
  return object == 0 ? spec.background_seed : spec.objects[object - 1].texture_seed;
}

// Deterministic per-point intensity in [0, 1].
inline float point_intensity(const SceneSpec& spec, int object, int x, int y) {
  const std::uint64_t h = hash_combine(
      hash_combine(hash_combine(spec.seed, object_texture_seed(spec, object)),
                   static_cast<std::uint64_t>(object)),
      point_id::encode(ScenePoint{object, false, x, y}));
  const double base = object == 0 ? 0.1 : 0.4 + 0.15 * ((object - 1) % 3);
  return static_cast<float>(base + 0.3 * hash_unit(h));
}

inline std::array<int, 2> nearest_pixel(Point2d p) {
  return {static_cast<int>(std::floor(p.x + 0.5)), static_cast<int>(std::floor(p.y + 0.5))};
}

namespace detail {

struct LatticePoint {
  int x;
  int y;
};

inline std::vector<LatticePoint> lattice_support(const SceneSpec& spec, int object) {
  std::vector<LatticePoint> pts;
  if (object == 0) {
    pts.reserve(spec.dims.size());
    for (int y = 0; y < spec.dims.h; ++y) {
      for (int x = 0; x < spec.dims.w; ++x) pts.push_back({x, y});
    }
    return pts;
  }
  const auto& poly = spec.objects[object - 1].polygon;
  double x0 = poly[0].x, x1 = poly[0].x, y0 = poly[0].y, y1 = poly[0].y;
  for (auto v : poly) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  for (int y = static_cast<int>(std::floor(y0)); y <= static_cast<int>(std::ceil(y1)); ++y) {
    for (int x = static_cast<int>(std::floor(x0)); x <= static_cast<int>(std::ceil(x1)); ++x) {
      if (point_in_polygon(poly, {static_cast<double>(x), static_cast<double>(y)})) {
        pts.push_back({x, y});
      }
    }
  }
  return pts;
}

}  // namespace detail

inline SceneRender render(const SceneSpec& spec) {
  validate(spec);
  const GridDims dims = spec.dims;
  const int n_obj = static_cast<int>(spec.objects.size()) + 1;

  SceneRender r;
  r.spec = spec;
  r.motions.resize(static_cast<std::size_t>(n_obj));
  for (int o = 1; o < n_obj; ++o) r.motions[o] = spec.objects[o - 1].motion;

  // Paint order: background first, then objects by ascending z.
  std::vector<int> order(static_cast<std::size_t>(n_obj - 1));
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return spec.objects[a - 1].z < spec.objects[b - 1].z;
  });
  order.insert(order.begin(), 0);

  r.frame0 = ScalarField(dims);
  r.frame1 = ScalarField(dims);
  r.point_id0 = PointIdMap(dims, point_id::kNone);
  r.point_id1 = PointIdMap(dims, point_id::kNone);
  r.object_id0 = ObjectIdMap(dims, -1);
  r.object_id1 = ObjectIdMap(dims, -1);
  r.origin1 = CoordField(dims);

  std::vector<double> win_dist(dims.size());
  std::vector<std::int64_t> win_idx(dims.size());

  for (int o : order) {
    const auto support = detail::lattice_support(spec, o);
    const SceneMotion& motion = r.motions[o];

    // Frame 0: the support paints over lower objects.
    for (const auto& lp : support) {
      if (!dims.contains(lp.y, lp.x)) continue;
      const std::size_t i = dims.index(lp.y, lp.x);
      r.object_id0[i] = o;
      r.point_id0[i] = point_id::encode({o, false, lp.x, lp.y});
      r.frame0[i] = point_intensity(spec, o, lp.x, lp.y);
    }

    // Frame 1: forward-map the support, resolve collisions per object.
    std::fill(win_dist.begin(), win_dist.end(), std::numeric_limits<double>::infinity());
    std::fill(win_idx.begin(), win_idx.end(), -1);
    for (std::size_t k = 0; k < support.size(); ++k) {
      const auto& lp = support[k];
      const Point2d m = motion.apply({static_cast<double>(lp.x), static_cast<double>(lp.y)});
      const auto q = nearest_pixel(m);
      if (!dims.contains(q[1], q[0])) continue;
      const std::size_t qi = dims.index(q[1], q[0]);
      const double d = (m.x - q[0]) * (m.x - q[0]) + (m.y - q[1]) * (m.y - q[1]);
      // Support is generated in row-major order, so strict '<' keeps the
      // lowest (row, col) on exact ties.
      if (d < win_dist[qi]) {
        win_dist[qi] = d;
        win_idx[qi] = static_cast<std::int64_t>(k);
      }
    }
    for (int qy = 0; qy < dims.h; ++qy) {
      for (int qx = 0; qx < dims.w; ++qx) {
        const std::size_t qi = dims.index(qy, qx);
        const Point2d origin = motion.apply_inverse({static_cast<double>(qx), static_cast<double>(qy)});
        if (win_idx[qi] >= 0) {
          const auto& lp = support[static_cast<std::size_t>(win_idx[qi])];
          r.object_id1[qi] = o;
          r.point_id1[qi] = point_id::encode({o, false, lp.x, lp.y});
          r.frame1[qi] = point_intensity(spec, o, lp.x, lp.y);
          r.origin1[qi] = Vec2{static_cast<float>(origin.x), static_cast<float>(origin.y)};
          continue;
        }
        const bool covered = (o == 0) || point_in_polygon(spec.objects[o - 1].polygon, origin);
        if (!covered) continue;
        const auto near = nearest_pixel(origin);
        r.object_id1[qi] = o;
        r.point_id1[qi] = point_id::encode({o, true, qx, qy});
        r.frame1[qi] = point_intensity(spec, o, near[0], near[1]);
        r.origin1[qi] = Vec2{static_cast<float>(origin.x), static_cast<float>(origin.y)};
      }
    }
  }

  // Ground-truth flow and labels.
  r.gt_flow = FlowField(dims);
  r.gt_occlusion = OcclusionMap(dims, OcclusionVariant::kGroundTruth);
  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const std::size_t i = dims.index(y, x);
      const int o = r.object_id0[i];
      const Point2d p{static_cast<double>(x), static_cast<double>(y)};
      const Point2d m = r.motions[o].apply(p);
      r.gt_flow[i] = Vec2{static_cast<float>(m.x - p.x), static_cast<float>(m.y - p.y)};
      const auto q = nearest_pixel(m);
      if (!dims.contains(q[1], q[0])) {
        r.gt_occlusion.set(i, Occlusion::kOccOut);
      } else if (r.point_id1(q[1], q[0]) == r.point_id0[i]) {
        r.gt_occlusion.set(i, Occlusion::kNoc);
      } else {
        r.gt_occlusion.set(i, Occlusion::kOccIn);
      }
    }
  }
  return r;
}

// Checks the render against its labeling and identity invariants. Returns
// one message per violation (empty when consistent).
inline std::vector<std::string> check_render(const SceneRender& r) {
  std::vector<std::string> bad;
  const GridDims dims = r.frame0.dims();
  auto report = [&](std::size_t i, const std::string& msg) {
    if (bad.size() < 32) bad.push_back("pixel " + std::to_string(i) + ": " + msg);
  };
  if (!all_finite(r.gt_flow)) bad.push_back("gt_flow has non-finite values");
  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const std::size_t i = dims.index(y, x);
      const Occlusion label = r.gt_occlusion[i];
      if (label == Occlusion::kOcc) report(i, "estimate label in ground-truth map");
      if (r.object_id0[i] < 0 || r.object_id1[i] < 0) report(i, "uncovered pixel");
      const ScenePoint sp = point_id::decode(r.point_id0[i]);
      if (sp.hole || sp.x != x || sp.y != y || sp.object != r.object_id0[i]) {
        report(i, "frame-0 point identity mismatch");
      }
      const Vec2 f = r.gt_flow[i];
      const auto q = nearest_pixel({x + static_cast<double>(f.x), y + static_cast<double>(f.y)});
      const bool in_frame = dims.contains(q[1], q[0]);
      Occlusion expected = Occlusion::kOccOut;
      if (in_frame) {
        const std::size_t qi = dims.index(q[1], q[0]);
        expected = r.point_id1[qi] == r.point_id0[i] ? Occlusion::kNoc : Occlusion::kOccIn;
        if (expected == Occlusion::kNoc) {
          const Vec2 o = r.origin1[qi];
          if (std::hypot(o.x - x, o.y - y) > 0.7072) report(i, "NOC landing origin too far");
          if (r.object_id1[qi] != r.object_id0[i]) report(i, "NOC landing on another object");
        }
      }
      if (label != expected) report(i, "label disagrees with landing rule");
    }
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Standard regression suite (64 x 64).

namespace detail {

inline std::vector<Point2d> rect(double x0, double y0, double x1, double y1) {
  // Pixel-inclusive rectangle [x0, x1] x [y0, y1] with half-pixel edges.
  return {{x0 - 0.5, y0 - 0.5}, {x1 + 0.5, y0 - 0.5}, {x1 + 0.5, y1 + 0.5}, {x0 - 0.5, y1 + 0.5}};
}

inline SceneObject make_object(std::vector<Point2d> poly, int z, SceneMotion motion,
                               std::uint64_t seed, int k) {
  SceneObject obj;
  obj.polygon = std::move(poly);
  obj.z = z;
  obj.motion = motion;
  obj.texture_seed = hash_combine(seed, static_cast<std::uint64_t>(k) + 101);
  return obj;
}

}  // namespace detail

inline SceneMotion translation(double dx, double dy) { return SceneMotion{0.0, {}, {dx, dy}}; }
inline SceneMotion rotation(double theta, double cx, double cy) {
  return SceneMotion{theta, {cx, cy}, {}};
}

// Scenes with any rotating object form the rotation sub-suite.
inline bool has_rotation(const SceneSpec& spec) {
  return std::any_of(spec.objects.begin(), spec.objects.end(),
                     [](const SceneObject& o) { return o.motion.theta != 0.0; });
}

inline std::vector<SceneSpec> standard_suite(std::uint64_t seed) {
  using detail::make_object;
  using detail::rect;
  std::vector<SceneSpec> suite;
  auto base = [&](const char* name, int k) {
    SceneSpec s;
    s.name = name;
    s.dims = {64, 64};
    s.seed = hash_combine(seed, static_cast<std::uint64_t>(k));
    s.background_seed = hash_combine(s.seed, 7);
    return s;
  };

  {  // Nothing moves: every pixel is NOC.
    auto s = base("static_square", 0);
    s.objects.push_back(make_object(rect(20, 20, 35, 35), 1, translation(0, 0), s.seed, 1));
    suite.push_back(s);
  }
  {  // Square fully visible in both frames; it covers a background strip.
    auto s = base("translate_square", 1);
    s.objects.push_back(make_object(rect(16, 18, 29, 31), 1, translation(5, 3), s.seed, 1));
    suite.push_back(s);
  }
  {  // Square half leaves the frame.
    auto s = base("occ_out_translate", 2);
    s.objects.push_back(make_object(rect(46, 20, 57, 31), 1, translation(10, 0), s.seed, 1));
    suite.push_back(s);
  }
  {  // Square B slides over static square A.
    auto s = base("occ_in_cover", 3);
    s.objects.push_back(make_object(rect(12, 16, 31, 39), 1, translation(0, 0), s.seed, 1));
    s.objects.push_back(make_object(rect(36, 20, 47, 35), 2, translation(-10, 2), s.seed, 2));
    suite.push_back(s);
  }
  {  // Band rotating about a point near its left end; an occluder slides up
     // over its right arm, leaving only the part near the center visible.
    auto s = base("rotating_band", 4);
    s.objects.push_back(make_object(rect(10, 28, 54, 37), 1, rotation(0.15, 18, 32.5), s.seed, 1));
    s.objects.push_back(make_object(rect(23, 38, 54, 62), 2, translation(0, -10), s.seed, 2));
    suite.push_back(s);
  }
  {  // L-shape rotating about its corner; a bar slides down over the far
     // half of its horizontal arm.
    auto s = base("rotating_l", 5);
    std::vector<Point2d> ell = {{11.5, 9.5},  {19.5, 9.5},  {19.5, 37.5}, {45.5, 37.5},
                                {45.5, 45.5}, {11.5, 45.5}};
    s.objects.push_back(make_object(ell, 1, rotation(-0.12, 16, 42), s.seed, 1));
    s.objects.push_back(make_object(rect(29, 20, 46, 37), 2, translation(0, 10), s.seed, 2));
    suite.push_back(s);
  }
  {  // Vertical band under rotation + translation; an occluder slides left
     // over its upper part. A small square leaves through the left edge.
    auto s = base("rotation_translation", 6);
    SceneMotion m{0.12, {32.5, 48.0}, {1.0, -1.0}};
    s.objects.push_back(make_object(rect(28, 12, 37, 54), 1, m, s.seed, 1));
    s.objects.push_back(make_object(rect(39, 6, 58, 30), 2, translation(-10, 0), s.seed, 2));
    s.objects.push_back(make_object(rect(1, 40, 8, 47), 3, translation(-5, 0), s.seed, 3));
    suite.push_back(s);
  }
  {  // Rotating L, translating T partly covering it, square leaving frame.
    auto s = base("multi_object", 7);
    std::vector<Point2d> ell = {{7.5, 7.5},   {15.5, 7.5},  {15.5, 32.5}, {35.5, 32.5},
                                {35.5, 40.5}, {7.5, 40.5}};
    std::vector<Point2d> tee = {{29.5, 11.5}, {55.5, 11.5}, {55.5, 19.5}, {46.5, 19.5},
                                {46.5, 44.5}, {38.5, 44.5}, {38.5, 19.5}, {29.5, 19.5}};
    s.objects.push_back(make_object(ell, 1, rotation(0.1, 12, 36), s.seed, 1));
    s.objects.push_back(make_object(tee, 2, translation(-8, 4), s.seed, 2));
    s.objects.push_back(make_object(rect(54, 46, 61, 53), 3, translation(6, 2), s.seed, 3));
    suite.push_back(s);
  }
  return suite;
}

inline const SceneSpec* find_scene(const std::vector<SceneSpec>& suite, const std::string& name) {
  for (const auto& s : suite) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

}  // namespace loopflow
