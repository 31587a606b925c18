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
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace loopflow {

// Error hierarchy. The CLI maps these onto exit codes:
// ConfigError -> 1, DataError -> 2, InvariantError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

struct GridDims {
  int h = 0;
  int w = 0;

  constexpr std::size_t size() const {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  constexpr bool valid() const { return h >= 1 && w >= 1; }
  constexpr bool contains(int row, int col) const {
    return row >= 0 && row < h && col >= 0 && col < w;
  }
  constexpr std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(w) +
           static_cast<std::size_t>(col);
  }
  friend constexpr bool operator==(const GridDims&, const GridDims&) = default;
};

inline std::string to_string(GridDims d) {
  return std::to_string(d.h) + "x" + std::to_string(d.w);
}

inline void require_valid(GridDims d) {
  if (!d.valid()) throw DataError("invalid grid dims " + to_string(d));
}

inline void require_same_dims(GridDims a, GridDims b, const char* what) {
  if (a != b) {
    throw DataError(std::string(what) + ": shape mismatch " + to_string(a) +
                    " vs " + to_string(b));
  }
}

// Single-precision 2-vector. Used both for coordinates (x = column,
// y = row) and displacements (dx, dy).
struct Vec2 {
  float x = 0.0f;
  float y = 0.0f;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(float s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline float norm(Vec2 v) { return std::hypot(v.x, v.y); }

// Double-precision point for scene geometry and motion fitting.
struct Point2d {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2d operator+(Point2d a, Point2d b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2d operator-(Point2d a, Point2d b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2d operator*(double s, Point2d a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2d, Point2d) = default;
};

inline double norm(Point2d p) { return std::hypot(p.x, p.y); }
inline double distance(Point2d a, Point2d b) { return norm(a - b); }
inline Point2d to_point(Vec2 v) { return {v.x, v.y}; }

// Dense row-major h x w grid of T. The Tag parameter keeps coordinate,
// flow and scalar fields from being mixed up at compile time.
template <class T, class Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(GridDims dims, T fill = T{}) : dims_(dims) {
    require_valid(dims);
    data_.assign(dims.size(), fill);
  }

  GridDims dims() const { return dims_; }
  int height() const { return dims_.h; }
  int width() const { return dims_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int row, int col) { return data_[dims_.index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[dims_.index(row, col)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  GridDims dims_{};
  std::vector<T> data_;
};

struct CoordTag {};
struct FlowTag {};
struct ScalarTag {};
struct MaskTag {};

using CoordField = Grid<Vec2, CoordTag>;
using FlowField = Grid<Vec2, FlowTag>;
using ScalarField = Grid<float, ScalarTag>;
using MaskField = Grid<std::uint8_t, MaskTag>;

template <class T, class Tag>
bool all_finite(const Grid<T, Tag>& g) {
  if constexpr (std::is_same_v<T, Vec2>) {
    return std::all_of(g.begin(), g.end(),
                       [](Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); });
  } else {
    return std::all_of(g.begin(), g.end(), [](T v) { return std::isfinite(v); });
  }
}

// Per-pixel descriptor map, h x w x depth, stored pixel-major so a
// descriptor is a contiguous span.
class FeatureMap {
 public:
  static constexpr float kNormTolerance = 1e-5f;

  FeatureMap() = default;
  FeatureMap(GridDims dims, int depth) : dims_(dims), depth_(depth) {
    require_valid(dims);
    if (depth < 1) throw DataError("feature depth must be >= 1");
    data_.assign(dims.size() * static_cast<std::size_t>(depth), 0.0f);
  }

  GridDims dims() const { return dims_; }
  int depth() const { return depth_; }
  bool normalized() const { return normalized_; }

  std::span<float> at(std::size_t pixel) {
    return {data_.data() + pixel * static_cast<std::size_t>(depth_),
            static_cast<std::size_t>(depth_)};
  }
  std::span<const float> at(std::size_t pixel) const {
    return {data_.data() + pixel * static_cast<std::size_t>(depth_),
            static_cast<std::size_t>(depth_)};
  }
  std::span<float> at(int row, int col) { return at(dims_.index(row, col)); }
  std::span<const float> at(int row, int col) const { return at(dims_.index(row, col)); }

  std::span<const float> raw() const { return data_; }

  // Scales every descriptor to unit length and sets the flag. Throws on a
  // zero descriptor since those cannot satisfy the normalized invariant.
  void normalize() {
    for (std::size_t p = 0; p < dims_.size(); ++p) {
      auto d = at(p);
      double sq = 0.0;
      for (float v : d) sq += static_cast<double>(v) * v;
      if (!(sq > 0.0)) throw DataError("cannot normalize a zero descriptor");
      const double inv = 1.0 / std::sqrt(sq);
      for (float& v : d) v = static_cast<float>(v * inv);
    }
    normalized_ = true;
  }

  // Flags the map as normalized after checking every descriptor norm.
  void mark_normalized() {
    for (std::size_t p = 0; p < dims_.size(); ++p) {
      double sq = 0.0;
      for (float v : at(p)) sq += static_cast<double>(v) * v;
      if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
        throw InvariantError("descriptor at pixel " + std::to_string(p) +
                             " is not unit length");
      }
    }
    normalized_ = true;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  GridDims dims_{};
  int depth_ = 0;
  bool normalized_ = false;
  std::vector<float> data_;
};

inline float dot(std::span<const float> a, std::span<const float> b) {
  float s = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

enum class Occlusion : std::uint8_t {
  kNoc = 0,
  kOcc = 1,     // estimate variant
  kOccIn = 2,   // ground-truth variant
  kOccOut = 3,  // ground-truth variant
};

enum class OcclusionVariant { kEstimate, kGroundTruth };

struct OcclusionTag {};

// Per-pixel occlusion labels. The estimate variant admits {NOC, OCC}; the
// ground-truth variant admits {NOC, OCC_IN, OCC_OUT}.
class OcclusionMap {
 public:
  OcclusionMap() = default;
  OcclusionMap(GridDims dims, OcclusionVariant variant)
      : variant_(variant), labels_(dims, Occlusion::kNoc) {}

  GridDims dims() const { return labels_.dims(); }
  OcclusionVariant variant() const { return variant_; }
  std::size_t size() const { return labels_.size(); }

  Occlusion operator[](std::size_t i) const { return labels_[i]; }
  Occlusion operator()(int row, int col) const { return labels_(row, col); }

  void set(std::size_t i, Occlusion label) {
    if (!admits(label)) throw InvariantError("label not valid for occlusion map variant");
    labels_[i] = label;
  }
  void set(int row, int col, Occlusion label) { set(dims().index(row, col), label); }

  bool occluded(std::size_t i) const { return labels_[i] != Occlusion::kNoc; }

  bool admits(Occlusion label) const {
    if (label == Occlusion::kNoc) return true;
    if (variant_ == OcclusionVariant::kEstimate) return label == Occlusion::kOcc;
    return label == Occlusion::kOccIn || label == Occlusion::kOccOut;
  }

  // Collapses the ground-truth variant onto {NOC, OCC}.
  OcclusionMap binarized() const {
    OcclusionMap out(dims(), OcclusionVariant::kEstimate);
    for (std::size_t i = 0; i < size(); ++i) {
      out.labels_[i] = occluded(i) ? Occlusion::kOcc : Occlusion::kNoc;
    }
    return out;
  }

  friend bool operator==(const OcclusionMap&, const OcclusionMap&) = default;

 private:
  OcclusionVariant variant_ = OcclusionVariant::kEstimate;
  Grid<Occlusion, OcclusionTag> labels_;
};

// Identity coordinate grid: pixel (row i, col j) holds (x = j, y = i).
inline CoordField init_coord(GridDims dims) {
  CoordField c(dims);
  for (int i = 0; i < dims.h; ++i) {
    for (int j = 0; j < dims.w; ++j) {
      c(i, j) = Vec2{static_cast<float>(j), static_cast<float>(i)};
    }
  }
  return c;
}

// Landing coordinates p + flow(p) for every p.
inline CoordField target_coords(const FlowField& flow, const CoordField& init) {
  require_same_dims(flow.dims(), init.dims(), "target_coords");
  CoordField out(init.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = init[i] + flow[i];
  return out;
}

inline FlowField zero_flow(GridDims dims) { return FlowField(dims, Vec2{}); }

enum class Padding { kZero, kClamp };

namespace detail {

struct Tap {
  std::size_t index;
  float weight;
};

// Up to four bilinear taps at coordinate c. Zero-weight taps are dropped
// so integer coordinates reproduce the source value exactly, and
// out-of-bounds taps are dropped under ZERO padding.
struct Taps {
  Tap tap[4];
  int count = 0;
};

inline Taps bilinear_taps(Vec2 c, GridDims dims, Padding padding) {
  Taps t;
  float x = c.x;
  float y = c.y;
  if (!std::isfinite(x) || !std::isfinite(y)) return t;
  if (padding == Padding::kClamp) {
    x = std::clamp(x, 0.0f, static_cast<float>(dims.w - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(dims.h - 1));
  }
  const float fx0 = std::floor(x);
  const float fy0 = std::floor(y);
  const float ax = x - fx0;
  const float ay = y - fy0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const float wx[2] = {1.0f - ax, ax};
  const float wy[2] = {1.0f - ay, ay};
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const float wgt = wy[dy] * wx[dx];
      if (wgt == 0.0f) continue;
      const int r = y0 + dy;
      const int col = x0 + dx;
      if (!dims.contains(r, col)) continue;
      t.tap[t.count++] = Tap{dims.index(r, col), wgt};
    }
  }
  return t;
}

}  // namespace detail

// Bilinear resampling of a 2-vector or scalar field at arbitrary coordinates.
template <class T, class Tag>
Grid<T, Tag> sample_bilinear(const Grid<T, Tag>& field, const CoordField& coords,
                             Padding padding) {
  Grid<T, Tag> out(coords.dims());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto taps = detail::bilinear_taps(coords[i], field.dims(), padding);
    T acc{};
    for (int k = 0; k < taps.count; ++k) {
      const T& v = field[taps.tap[k].index];
      if constexpr (std::is_same_v<T, Vec2>) {
        acc = acc + taps.tap[k].weight * v;
      } else {
        acc += taps.tap[k].weight * v;
      }
    }
    out[i] = acc;
  }
  return out;
}

// Single-point descriptor lookup; writes into `out` (size == depth).
inline void sample_descriptor(const FeatureMap& field, Vec2 c, Padding padding,
                              std::span<float> out) {
  std::fill(out.begin(), out.end(), 0.0f);
  const auto taps = detail::bilinear_taps(c, field.dims(), padding);
  for (int k = 0; k < taps.count; ++k) {
    const auto src = field.at(taps.tap[k].index);
    const float wgt = taps.tap[k].weight;
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += wgt * src[d];
  }
}

// Resamples a feature map. The result is never flagged normalized:
// interpolated and zero-padded descriptors are not unit length in general.
inline FeatureMap sample_bilinear(const FeatureMap& field, const CoordField& coords,
                                  Padding padding) {
  FeatureMap out(coords.dims(), field.depth());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    sample_descriptor(field, coords[i], padding, out.at(i));
  }
  return out;
}

}  // namespace loopflow
