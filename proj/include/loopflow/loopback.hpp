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

// Loopback judgment.
//
// Each frame-0 pixel p0 is carried to p1 = p0 + flow0(p0), frame-1
// features are resampled there (F1'), and F1' is matched back against F0.
// The best frame-0 match p0' is p0 itself exactly when the point is
// visible in both frames; otherwise p0' is a visible point resembling p0,
// which becomes its reference.

#pragma once

#include <cstdint>

#include "loopflow/core.hpp"
#include "loopflow/matching.hpp"

namespace loopflow {

struct PairTag {};
using CorrelationPairField = Grid<Vec2, PairTag>;

struct LoopbackResult {
  FlowField flow_ref;          // p0' - p0
  OcclusionMap occlusion;      // estimate variant
  CorrelationPairField pairs;  // p0' per pixel
  FlowField ref_flow;          // flow0 sampled at p0'
};

inline LoopbackResult run_loopback(const FeatureMap& F0, const FeatureMap& F1, const FlowField& flow0,
                                   const MatchMode& mode, float tau_occ, float temperature) {
  require_same_dims(F0.dims(), F1.dims(), "run_loopback features");
  require_same_dims(F0.dims(), flow0.dims(), "run_loopback flow0");
  if (!(tau_occ > 0.0f)) throw ConfigError("tau_occ must be > 0");
  validate(mode);
  const GridDims dims = F0.dims();

  const CoordField p1 = target_coords(flow0, init_coord(dims));
  const FeatureMap F1_prime = sample_bilinear(F1, p1, Padding::kZero);
  const GlobalCorrelation corr = global_correlation(F1_prime, F0, temperature);

  LoopbackResult r;
  r.flow_ref = match_flow(corr, mode);
  r.occlusion = OcclusionMap(dims, OcclusionVariant::kEstimate);
  r.pairs = CorrelationPairField(dims);
  CoordField at(dims);
  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const std::size_t i = dims.index(y, x);
      const Vec2 d = r.flow_ref[i];
      r.occlusion.set(i, norm(d) <= tau_occ ? Occlusion::kNoc : Occlusion::kOcc);
      r.pairs[i] = Vec2{static_cast<float>(x) + d.x, static_cast<float>(y) + d.y};
      at[i] = r.pairs[i];
    }
  }
  r.ref_flow = sample_bilinear(flow0, at, Padding::kClamp);
  return r;
}

struct MatchingCostReport {
  std::uint64_t global_match_count = 0;
  std::uint64_t bidirectional_equivalent_count = 3;
};

inline MatchingCostReport matching_cost_report() { return {global_match_count(), 3}; }

}  // namespace loopflow
