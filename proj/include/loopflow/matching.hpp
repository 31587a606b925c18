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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "loopflow/core.hpp"

namespace loopflow {

// ---------------------------------------------------------------------------
// Invocation counters. The process-wide one is the only shared mutable
// state in the library; the per-thread one lets concurrent pipeline runs
// count their own invocations.

namespace detail {
inline std::atomic<std::uint64_t> global_match_counter{0};
inline thread_local std::uint64_t thread_match_counter = 0;
}  // namespace detail

inline std::uint64_t thread_match_count() { return detail::thread_match_counter; }

inline std::uint64_t global_match_count() {
  return detail::global_match_counter.load(std::memory_order_relaxed);
}
inline void reset_global_match_count() {
  detail::global_match_counter.store(0, std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------
// Global correlation.

// Dense (h*w) x (h*w) similarity matrix. Row = query pixel in raster
// order, column = key pixel in raster order.
class GlobalCorrelation {
 public:
  GlobalCorrelation() = default;
  GlobalCorrelation(GridDims dims, float temperature)
      : dims_(dims), temperature_(temperature), values_(dims.size() * dims.size(), 0.0f) {}

  GridDims dims() const { return dims_; }
  std::size_t size() const { return dims_.size(); }  // queries == keys
  float temperature() const { return temperature_; }

  float operator()(std::size_t q, std::size_t k) const { return values_[q * size() + k]; }
  std::span<const float> row(std::size_t q) const { return {values_.data() + q * size(), size()}; }
  std::span<float> row(std::size_t q) { return {values_.data() + q * size(), size()}; }

 private:
  GridDims dims_{};
  float temperature_ = 1.0f;
  std::vector<float> values_;
};

inline float default_temperature(int depth) { return 1.0f / std::sqrt(static_cast<float>(depth)); }

// block_rows bounds the working set of the blocked product; it does not
// change the result.
inline GlobalCorrelation global_correlation(const FeatureMap& queries, const FeatureMap& keys,
                                            float temperature, int block_rows = 64) {
  if (queries.depth() != keys.depth()) throw DataError("global_correlation: descriptor depth mismatch");
  require_same_dims(queries.dims(), keys.dims(), "global_correlation");
  if (!(temperature > 0.0f) || !std::isfinite(temperature)) {
    throw ConfigError("global_correlation: temperature must be > 0");
  }
  if (block_rows < 1) throw ConfigError("global_correlation: block_rows must be >= 1");
  detail::global_match_counter.fetch_add(1, std::memory_order_relaxed);
  ++detail::thread_match_counter;

  const std::size_t n = queries.dims().size();
  const std::size_t depth = static_cast<std::size_t>(queries.depth());
  GlobalCorrelation corr(queries.dims(), temperature);

  // Keys transposed to depth x n so the inner loop streams contiguously.
  std::vector<float> kt(depth * n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto d = keys.at(k);
    for (std::size_t c = 0; c < depth; ++c) kt[c * n + k] = d[c];
  }
  const float inv_t = 1.0f / temperature;
  const std::size_t block = static_cast<std::size_t>(block_rows);
  for (std::size_t q0 = 0; q0 < n; q0 += block) {
    const std::size_t q1 = std::min(n, q0 + block);
    for (std::size_t q = q0; q < q1; ++q) {
      float* out = corr.row(q).data();
      const auto qd = queries.at(q);
      for (std::size_t c = 0; c < depth; ++c) {
        const float a = qd[c];
        if (a == 0.0f) continue;
        const float* kr = kt.data() + c * n;
        for (std::size_t k = 0; k < n; ++k) out[k] += a * kr[k];
      }
      for (std::size_t k = 0; k < n; ++k) out[k] *= inv_t;
    }
  }
  return corr;
}

// ---------------------------------------------------------------------------
// Matching layer.

enum class MatchKind { kArgmax, kSoftArgmax };

struct MatchMode {
  MatchKind kind = MatchKind::kArgmax;
  float temperature = 0.01f;  // SOFTARGMAX: softmax over raw dot products / temperature
};

inline void validate(const MatchMode& m) {
  if (!(m.temperature > 0.0f) || !std::isfinite(m.temperature)) {
    throw ConfigError("match temperature must be > 0");
  }
}

// Lowest raster index among the maxima of a row.
inline std::size_t argmax_index(std::span<const float> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

inline FlowField match_flow(const GlobalCorrelation& corr, const MatchMode& mode) {
  validate(mode);
  const GridDims dims = corr.dims();
  FlowField flow(dims);
  const std::size_t n = dims.size();
  const auto w = static_cast<std::size_t>(dims.w);
  std::vector<double> weights(n);
  for (std::size_t q = 0; q < n; ++q) {
    const auto row = corr.row(q);
    const double px = static_cast<double>(q % w);
    const double py = static_cast<double>(q / w);
    if (mode.kind == MatchKind::kArgmax) {
      const std::size_t k = argmax_index(row);
      flow[q] = Vec2{static_cast<float>(static_cast<double>(k % w) - px),
                     static_cast<float>(static_cast<double>(k / w) - py)};
      continue;
    }
    // Rescale so the effective softmax temperature is mode.temperature
    // regardless of the temperature baked into the correlation.
    const double scale = static_cast<double>(corr.temperature()) / mode.temperature;
    const double top = row[argmax_index(row)] * scale;
    double z = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      weights[k] = std::exp(row[k] * scale - top);
      z += weights[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      mx += weights[k] * static_cast<double>(k % w);
      my += weights[k] * static_cast<double>(k / w);
    }
    flow[q] = Vec2{static_cast<float>(mx / z - px), static_cast<float>(my / z - py)};
  }
  return flow;
}

// ---------------------------------------------------------------------------
// Local cost volume.

class LocalCostVolume {
 public:
  LocalCostVolume() = default;
  LocalCostVolume(GridDims dims, int radius)
      : dims_(dims), radius_(radius), values_(dims.size() * static_cast<std::size_t>(channels_for(radius)), 0.0f) {}

  static int channels_for(int radius) { return (2 * radius + 1) * (2 * radius + 1); }

  GridDims dims() const { return dims_; }
  int radius() const { return radius_; }
  int channels() const { return channels_for(radius_); }
  bool empty() const { return values_.empty(); }

  // Channel of offset (dx, dy), both in [-r, r].
  int channel(int dx, int dy) const { return (dy + radius_) * (2 * radius_ + 1) + (dx + radius_); }
  Vec2 offset(int c) const {
    const int side = 2 * radius_ + 1;
    return Vec2{static_cast<float>(c % side - radius_), static_cast<float>(c / side - radius_)};
  }

  std::span<const float> at(std::size_t pixel) const {
    const auto c = static_cast<std::size_t>(channels());
    return {values_.data() + pixel * c, c};
  }
  std::span<float> at(std::size_t pixel) {
    const auto c = static_cast<std::size_t>(channels());
    return {values_.data() + pixel * c, c};
  }

 private:
  GridDims dims_{};
  int radius_ = 0;
  std::vector<float> values_;
};

inline LocalCostVolume local_cost_volume(const FeatureMap& f0, const FeatureMap& f1,
                                         const FlowField& flow, int radius) {
  if (radius < 1) throw ConfigError("local cost volume radius must be >= 1");
  if (f0.depth() != f1.depth()) throw DataError("local_cost_volume: descriptor depth mismatch");
  require_same_dims(f0.dims(), f1.dims(), "local_cost_volume");
  require_same_dims(f0.dims(), flow.dims(), "local_cost_volume");
  const GridDims dims = f0.dims();
  LocalCostVolume vol(dims, radius);
  std::vector<float> buf(static_cast<std::size_t>(f1.depth()));
  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const std::size_t i = dims.index(y, x);
      const auto d0 = f0.at(i);
      auto out = vol.at(i);
      const Vec2 base{static_cast<float>(x) + flow[i].x, static_cast<float>(y) + flow[i].y};
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          sample_descriptor(f1, Vec2{base.x + dx, base.y + dy}, Padding::kZero, buf);
          out[static_cast<std::size_t>(vol.channel(dx, dy))] = dot(d0, buf);
        }
      }
    }
  }
  return vol;
}

// Offset of the best channel per pixel. Ties prefer the smallest offset
// magnitude, then raster order of the offset grid, so a flat volume gives
// zero correction.
inline FlowField local_flow_correction(const LocalCostVolume& vol) {
  if (vol.empty()) throw DataError("local_flow_correction: empty cost volume");
  FlowField out(vol.dims());
  for (std::size_t i = 0; i < vol.dims().size(); ++i) {
    const auto v = vol.at(i);
    int best = vol.channel(0, 0);
    for (int c = 0; c < vol.channels(); ++c) {
      if (v[c] > v[best]) {
        best = c;
      } else if (v[c] == v[best]) {
        const Vec2 a = vol.offset(c);
        const Vec2 b = vol.offset(best);
        const float ma = a.x * a.x + a.y * a.y;
        const float mb = b.x * b.x + b.y * b.y;
        if (ma < mb || (ma == mb && c < best)) best = c;
      }
    }
    out[i] = vol.offset(best);
  }
  return out;
}

}  // namespace loopflow
