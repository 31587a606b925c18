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
#include <cstddef>
#include <optional>
#include <span>

#include "loopflow/core.hpp"

namespace loopflow {

// Mean end-point error over one pixel region. `aepe` is empty when the
// region has no pixels.
struct RegionError {
  std::size_t count = 0;
  double sum = 0.0;
  std::optional<double> aepe;

  void add(double e) {
    ++count;
    sum += e;
  }
  void finish() { aepe = count > 0 ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt; }
};

struct PartitionedAEPE {
  RegionError all;
  RegionError noc;
  RegionError occ;
  RegionError occ_in;
  RegionError occ_out;
};

inline double endpoint_error(Vec2 a, Vec2 b) {
  return std::hypot(static_cast<double>(a.x) - b.x, static_cast<double>(a.y) - b.y);
}

// With an estimate-variant label map only noc/occ/all are populated.
inline PartitionedAEPE aepe_partitioned(const FlowField& pred, const FlowField& gt, const OcclusionMap& labels) {
  require_same_dims(pred.dims(), gt.dims(), "aepe_partitioned");
  require_same_dims(pred.dims(), labels.dims(), "aepe_partitioned labels");
  PartitionedAEPE r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = endpoint_error(pred[i], gt[i]);
    r.all.add(e);
    switch (labels[i]) {
      case Occlusion::kNoc: r.noc.add(e); break;
      case Occlusion::kOcc: r.occ.add(e); break;
      case Occlusion::kOccIn:
        r.occ.add(e);
        r.occ_in.add(e);
        break;
      case Occlusion::kOccOut:
        r.occ.add(e);
        r.occ_out.add(e);
        break;
    }
  }
  for (RegionError* e : {&r.all, &r.noc, &r.occ, &r.occ_in, &r.occ_out}) e->finish();
  return r;
}

namespace detail {
inline double weighted(const RegionError& e) { return e.aepe ? *e.aepe * static_cast<double>(e.count) : 0.0; }
}  // namespace detail

// Largest violation of the two count-weighted decomposition identities:
// all = mix(noc, occ) and, when the sub-split is populated,
// occ = mix(occ_in, occ_out).
inline double decomposition_error(const PartitionedAEPE& r) {
  double worst = 0.0;
  if (r.all.count > 0) {
    const double mix = (detail::weighted(r.noc) + detail::weighted(r.occ)) / static_cast<double>(r.all.count);
    worst = std::max(worst, std::abs(*r.all.aepe - mix));
  }
  const std::size_t split = r.occ_in.count + r.occ_out.count;
  if (r.occ.count > 0 && split > 0) {
    const double mix = (detail::weighted(r.occ_in) + detail::weighted(r.occ_out)) / static_cast<double>(split);
    worst = std::max(worst, std::abs(*r.occ.aepe - mix));
  }
  return worst;
}

// Binary metrics with OCC (any occluded label) as the positive class.
struct OcclusionPRF {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

inline OcclusionPRF occlusion_prf(const OcclusionMap& pred, const OcclusionMap& gt) {
  require_same_dims(pred.dims(), gt.dims(), "occlusion_prf");
  OcclusionPRF m;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.occluded(i);
    const bool g = gt.occluded(i);
    if (p && g) ++m.tp;
    else if (p) ++m.fp;
    else if (g) ++m.fn;
    else ++m.tn;
  }
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  } else if (m.precision && m.recall) {
    m.f1 = 0.0;
  }
  return m;
}

// Pearson correlation; empty when either input has zero variance.
inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("pearson: length mismatch");
  if (a.size() < 2) return std::nullopt;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace loopflow
