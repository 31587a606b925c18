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

// occ_in identification and one-shot refinement.
//
// Refinement builds a weight field w in [0, 1] and a residual flow, then
// fuses them with flow0 as (1 - w) * flow0 + w * residual. The rule-based
// strategies below emit hard {0, 1} weights.

#pragma once

#include <cstddef>
#include <string>

#include "loopflow/core.hpp"
#include "loopflow/loopback.hpp"
#include "loopflow/matching.hpp"
#include "loopflow/rotation.hpp"

namespace loopflow {

struct SimilarityPair {
  ScalarField local_sim;   // <f0(p), f1 at p + flow0(p)>
  ScalarField global_sim;  // <F0(p), F1 at p + flow0(p)>
};

inline SimilarityPair similarity_pair(const FeatureMap& f0, const FeatureMap& f1, const FeatureMap& F0,
                                      const FeatureMap& F1, const FlowField& flow0) {
  for (const FeatureMap* m : {&f0, &f1, &F0, &F1}) {
    if (!m->normalized()) throw DataError("similarity_pair needs unit-normalized features");
    require_same_dims(m->dims(), flow0.dims(), "similarity_pair");
  }
  if (f0.depth() != f1.depth() || F0.depth() != F1.depth()) {
    throw DataError("similarity_pair: descriptor depth mismatch");
  }
  const GridDims dims = flow0.dims();
  SimilarityPair s{ScalarField(dims), ScalarField(dims)};
  std::vector<float> lb(static_cast<std::size_t>(f1.depth()));
  std::vector<float> gb(static_cast<std::size_t>(F1.depth()));
  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const std::size_t i = dims.index(y, x);
      const Vec2 t{static_cast<float>(x) + flow0[i].x, static_cast<float>(y) + flow0[i].y};
      sample_descriptor(f1, t, Padding::kZero, lb);
      sample_descriptor(F1, t, Padding::kZero, gb);
      s.local_sim[i] = dot(f0.at(i), lb);
      s.global_sim[i] = dot(F0.at(i), gb);
    }
  }
  return s;
}

struct OccInClassification {
  MaskField flags;                  // 1 = occ_in
  std::size_t flagged = 0;
  std::size_t flagged_loopback_noc = 0;  // diagnostic: flags the loopback called NOC
};

inline OccInClassification classify_occ_in(const SimilarityPair& sims, const OcclusionMap& occ_estimate,
                                           float g_hi, float l_lo) {
  // g_hi above 1 is accepted; it disables the classifier.
  if (!(g_hi > l_lo) || !(l_lo > -1.0f)) throw ConfigError("occ_in thresholds need -1 < l_lo < g_hi");
  require_same_dims(sims.local_sim.dims(), sims.global_sim.dims(), "classify_occ_in");
  require_same_dims(sims.local_sim.dims(), occ_estimate.dims(), "classify_occ_in");
  OccInClassification c{MaskField(occ_estimate.dims(), 0)};
  for (std::size_t i = 0; i < c.flags.size(); ++i) {
    if (sims.global_sim[i] >= g_hi && sims.local_sim[i] <= l_lo) {
      c.flags[i] = 1;
      ++c.flagged;
      if (!occ_estimate.occluded(i)) ++c.flagged_loopback_noc;
    }
  }
  return c;
}

// (1 - w) * flow0 + w * residual, with w = 0 and w = 1 reproducing their
// operand bit for bit.
inline FlowField fuse(const FlowField& flow0, const ScalarField& weight, const FlowField& residual) {
  require_same_dims(flow0.dims(), weight.dims(), "fuse weight");
  require_same_dims(flow0.dims(), residual.dims(), "fuse residual");
  FlowField out(flow0.dims());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float w = weight[i];
    if (!(w >= 0.0f && w <= 1.0f)) {
      throw DataError("fuse: weight " + std::to_string(w) + " outside [0, 1] at pixel " + std::to_string(i));
    }
    if (w == 0.0f) {
      out[i] = flow0[i];
    } else if (w == 1.0f) {
      out[i] = residual[i];
    } else {
      out[i] = (1.0f - w) * flow0[i] + w * residual[i];
    }
  }
  return out;
}

enum class RefinerKind { kCopyReference, kRigidModel, kOff };
enum class NocHandling { kKeep, kLocalCorrect };

struct RefinerStrategy {
  RefinerKind kind = RefinerKind::kRigidModel;
  NocHandling noc = NocHandling::kKeep;
  double fit_tol = 0.5;  // max RMS residual (px) for a usable rigid fit
  double d_max = 32.0;   // RIGID_MODEL only: larger distances fall back to the reference flow
};

inline const char* to_string(RefinerKind k) {
  switch (k) {
    case RefinerKind::kCopyReference: return "copy_reference";
    case RefinerKind::kRigidModel: return "rigid_model";
    case RefinerKind::kOff: return "off";
  }
  return "?";
}

struct RefinementInputs {
  const FlowField* flow0 = nullptr;
  const LoopbackResult* loopback = nullptr;
  const ScalarField* distances = nullptr;
  DistanceMode distance_mode = DistanceMode::kUniformLaw;
  const MaskField* occ_in = nullptr;                // optional
  const LocalCostVolume* cost_volume = nullptr;     // required for LOCAL_CORRECT
  const SimilarityPair* sims = nullptr;             // optional, informational
  RigidFitCache* fits = nullptr;                    // required for RIGID_MODEL
};

struct RefinementFields {
  ScalarField weight;
  FlowField residual;
  std::size_t rigid_used = 0;      // OCC pixels taking the rigid prediction
  std::size_t rigid_fallback = 0;  // OCC pixels falling back to the reference flow
};

inline RefinementFields refinement_fields(const RefinementInputs& in, const RefinerStrategy& strategy) {
  if (in.flow0 == nullptr || in.loopback == nullptr) throw ConfigError("refine needs flow0 and loopback");
  const FlowField& flow0 = *in.flow0;
  const LoopbackResult& lb = *in.loopback;
  const GridDims dims = flow0.dims();
  require_same_dims(lb.occlusion.dims(), dims, "refine loopback");
  if (in.occ_in != nullptr) require_same_dims(in.occ_in->dims(), dims, "refine occ_in");
  if (in.distances != nullptr) require_same_dims(in.distances->dims(), dims, "refine distances");

  RefinementFields out{ScalarField(dims, 0.0f), flow0};
  if (strategy.kind == RefinerKind::kOff) return out;

  const bool rigid = strategy.kind == RefinerKind::kRigidModel;
  if (rigid && in.fits == nullptr) throw ConfigError("RIGID_MODEL needs rigid fits");
  if (rigid && in.distance_mode != DistanceMode::kNone && in.distances == nullptr) {
    throw ConfigError("RIGID_MODEL distance gating needs a distance field");
  }
  FlowField correction;
  if (strategy.noc == NocHandling::kLocalCorrect) {
    if (in.cost_volume == nullptr || in.cost_volume->empty()) {
      throw ConfigError("LOCAL_CORRECT needs a local cost volume");
    }
    require_same_dims(in.cost_volume->dims(), dims, "refine cost volume");
    correction = local_flow_correction(*in.cost_volume);
  }

  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const std::size_t i = dims.index(y, x);
      if (in.occ_in != nullptr && (*in.occ_in)[i] != 0) continue;  // weight 0
      if (!lb.occlusion.occluded(i)) {
        if (strategy.noc == NocHandling::kLocalCorrect) {
          out.weight[i] = 1.0f;
          out.residual[i] = flow0[i] + correction[i];
        }
        continue;
      }
      out.weight[i] = 1.0f;
      out.residual[i] = lb.ref_flow[i];
      if (!rigid) continue;
      // Without a distance there is nothing to gate extrapolation on, so
      // the reference flow is kept.
      bool use = in.distance_mode != DistanceMode::kNone && (*in.distances)[i] <= strategy.d_max;
      const RigidMotion2D* m = nullptr;
      if (use) {
        m = &in.fits->fit(lb.pairs[i]);
        use = !m->degenerate && m->residual <= strategy.fit_tol;
      }
      if (use) {
        out.residual[i] = m->displacement_at({static_cast<double>(x), static_cast<double>(y)});
        ++out.rigid_used;
      } else {
        ++out.rigid_fallback;
      }
    }
  }
  return out;
}

inline FlowField refine(const RefinementInputs& in, const RefinerStrategy& strategy) {
  const RefinementFields f = refinement_fields(in, strategy);
  return fuse(*in.flow0, f.weight, f.residual);
}

}  // namespace loopflow
