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

// End-to-end pipeline: features -> global matching (flow0) -> loopback ->
// distances -> occ_in classification -> refinement -> metrics.

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"
#include "loopflow/core.hpp"
#include "loopflow/features.hpp"
#include "loopflow/loopback.hpp"
#include "loopflow/matching.hpp"
#include "loopflow/metrics.hpp"
#include "loopflow/refine.hpp"
#include "loopflow/rotation.hpp"
#include "loopflow/scenes.hpp"

namespace loopflow {

struct PipelineConfig {
  FeatureProviderSpec features;
  MatchMode match;
  float correlation_temperature = 0.0f;  // <= 0: 1 / sqrt(D)
  int block_rows = 64;
  float tau_occ = 0.5f;
  DistanceMode distance = DistanceMode::kUniformLaw;
  RotationParams rotation;
  RefinerStrategy refiner;
  float g_hi = 0.8f;
  float l_lo = 0.3f;
  int cost_radius = 3;
  int downsample = 1;
  std::uint64_t seed = 0;
};

inline void validate(const PipelineConfig& c) {
  validate(c.features);
  validate(c.match);
  validate(c.rotation);
  if (c.block_rows < 1) throw ConfigError("block_rows must be >= 1");
  if (!(c.tau_occ > 0.0f)) throw ConfigError("tau_occ must be > 0");
  if (!(c.g_hi > c.l_lo) || !(c.l_lo > -1.0f)) throw ConfigError("occ_in thresholds need -1 < l_lo < g_hi");
  if (c.cost_radius < 1) throw ConfigError("cost_radius must be >= 1");
  if (c.downsample < 1) throw ConfigError("downsample must be >= 1");
  if (c.downsample > 1 && c.features.kind == FeatureKind::kOracle) {
    throw ConfigError("downsample applies to image-based features only");
  }
  if (!(c.refiner.fit_tol >= 0.0) || !(c.refiner.d_max >= 0.0)) throw ConfigError("fit_tol and d_max must be >= 0");
}

// ---------------------------------------------------------------------------
// JSON.

namespace detail {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

inline constexpr EnumName<FeatureKind> kFeatureNames[] = {
    {FeatureKind::kOracle, "oracle"}, {FeatureKind::kCensus, "census"}, {FeatureKind::kPatch, "patch"}};
inline constexpr EnumName<MatchKind> kMatchNames[] = {{MatchKind::kArgmax, "argmax"},
                                                      {MatchKind::kSoftArgmax, "softargmax"}};
inline constexpr EnumName<DistanceMode> kDistanceNames[] = {
    {DistanceMode::kNone, "none"}, {DistanceMode::kEuclidean, "euclidean"}, {DistanceMode::kUniformLaw, "uniform_law"}};
inline constexpr EnumName<UniformLawForm> kFormNames[] = {{UniformLawForm::kLiteral, "literal"},
                                                          {UniformLawForm::kRadial, "radial"}};
inline constexpr EnumName<RefinerKind> kRefinerNames[] = {{RefinerKind::kCopyReference, "copy_reference"},
                                                          {RefinerKind::kRigidModel, "rigid_model"},
                                                          {RefinerKind::kOff, "off"}};
inline constexpr EnumName<NocHandling> kNocNames[] = {{NocHandling::kKeep, "keep"},
                                                      {NocHandling::kLocalCorrect, "local_correct"}};

template <class E, std::size_t N>
const char* enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <class E, std::size_t N>
E enum_parse(const EnumName<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& e : table) {
    if (s == e.name) return e.value;
  }
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of: " + allowed + ")");
}

inline void check_keys(const nlohmann::json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string("config section '") + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError(std::string("unknown config key '") + section + "." + k + "'");
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class E, std::size_t N>
void read_enum(const nlohmann::json& j, const char* key, const EnumName<E> (&table)[N], E& out) {
  if (j.contains(key)) out = enum_parse(table, j.at(key).get<std::string>(), key);
}

}  // namespace detail

inline const char* to_string(DistanceMode m) { return detail::enum_name(detail::kDistanceNames, m); }
inline const char* to_string(MatchKind m) { return detail::enum_name(detail::kMatchNames, m); }
inline const char* to_string(NocHandling m) { return detail::enum_name(detail::kNocNames, m); }
inline const char* to_string(UniformLawForm m) { return detail::enum_name(detail::kFormNames, m); }
inline DistanceMode parse_distance_mode(const std::string& s) {
  return detail::enum_parse(detail::kDistanceNames, s, "distance mode");
}
inline RefinerKind parse_refiner(const std::string& s) { return detail::enum_parse(detail::kRefinerNames, s, "refiner"); }
inline FeatureKind parse_feature_kind(const std::string& s) {
  return detail::enum_parse(detail::kFeatureNames, s, "feature kind");
}
inline MatchKind parse_match_kind(const std::string& s) { return detail::enum_parse(detail::kMatchNames, s, "match kind"); }
inline UniformLawForm parse_uniform_form(const std::string& s) {
  return detail::enum_parse(detail::kFormNames, s, "uniform-law form");
}
inline NocHandling parse_noc_handling(const std::string& s) {
  return detail::enum_parse(detail::kNocNames, s, "noc handling");
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  using detail::enum_name;
  const auto& f = c.features;
  return {
      {"features",
       {{"kind", enum_name(detail::kFeatureNames, f.kind)},
        {"alpha", f.alpha},
        {"beta", f.beta},
        {"inject_occ_in", f.inject_occ_in},
        {"injection_keep", f.injection_keep},
        {"max_objects", f.max_objects},
        {"local_object_weight", f.local_object_weight},
        {"local_texture_weight", f.local_texture_weight},
        {"texture_dims", f.texture_dims},
        {"window", f.window},
        {"zero_mean", f.zero_mean}}},
      {"match",
       {{"kind", enum_name(detail::kMatchNames, c.match.kind)},
        {"temperature", c.match.temperature},
        {"correlation_temperature", c.correlation_temperature},
        {"block_rows", c.block_rows}}},
      {"loopback", {{"tau_occ", c.tau_occ}}},
      {"distance",
       {{"mode", enum_name(detail::kDistanceNames, c.distance)},
        {"form", enum_name(detail::kFormNames, c.rotation.form)},
        {"window_k", c.rotation.window_k},
        {"theta_min", c.rotation.theta_min},
        {"segment_threshold", c.rotation.segment_threshold}}},
      {"refine",
       {{"strategy", enum_name(detail::kRefinerNames, c.refiner.kind)},
        {"noc", enum_name(detail::kNocNames, c.refiner.noc)},
        {"fit_tol", c.refiner.fit_tol},
        {"d_max", c.refiner.d_max},
        {"g_hi", c.g_hi},
        {"l_lo", c.l_lo},
        {"cost_radius", c.cost_radius}}},
      {"downsample", c.downsample},
      {"seed", std::to_string(c.seed)},
  };
}

// Missing keys keep their defaults; unknown keys are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
  using namespace detail;
  try {
    check_keys(j, "root", {"features", "match", "loopback", "distance", "refine", "downsample", "seed"});
    if (j.contains("features")) {
      const auto& s = j.at("features");
      check_keys(s, "features",
                 {"kind", "alpha", "beta", "inject_occ_in", "injection_keep", "max_objects", "local_object_weight",
                  "local_texture_weight", "texture_dims", "window", "zero_mean"});
      auto& f = c.features;
      read_enum(s, "kind", kFeatureNames, f.kind);
      read(s, "alpha", f.alpha);
      read(s, "beta", f.beta);
      read(s, "inject_occ_in", f.inject_occ_in);
      read(s, "injection_keep", f.injection_keep);
      read(s, "max_objects", f.max_objects);
      read(s, "local_object_weight", f.local_object_weight);
      read(s, "local_texture_weight", f.local_texture_weight);
      read(s, "texture_dims", f.texture_dims);
      read(s, "window", f.window);
      read(s, "zero_mean", f.zero_mean);
    }
    if (j.contains("match")) {
      const auto& s = j.at("match");
      check_keys(s, "match", {"kind", "temperature", "correlation_temperature", "block_rows"});
      read_enum(s, "kind", kMatchNames, c.match.kind);
      read(s, "temperature", c.match.temperature);
      read(s, "correlation_temperature", c.correlation_temperature);
      read(s, "block_rows", c.block_rows);
    }
    if (j.contains("loopback")) {
      const auto& s = j.at("loopback");
      check_keys(s, "loopback", {"tau_occ"});
      read(s, "tau_occ", c.tau_occ);
    }
    if (j.contains("distance")) {
      const auto& s = j.at("distance");
      check_keys(s, "distance", {"mode", "form", "window_k", "theta_min", "segment_threshold"});
      read_enum(s, "mode", kDistanceNames, c.distance);
      read_enum(s, "form", kFormNames, c.rotation.form);
      read(s, "window_k", c.rotation.window_k);
      read(s, "theta_min", c.rotation.theta_min);
      read(s, "segment_threshold", c.rotation.segment_threshold);
    }
    if (j.contains("refine")) {
      const auto& s = j.at("refine");
      check_keys(s, "refine", {"strategy", "noc", "fit_tol", "d_max", "g_hi", "l_lo", "cost_radius"});
      read_enum(s, "strategy", kRefinerNames, c.refiner.kind);
      read_enum(s, "noc", kNocNames, c.refiner.noc);
      read(s, "fit_tol", c.refiner.fit_tol);
      read(s, "d_max", c.refiner.d_max);
      read(s, "g_hi", c.g_hi);
      read(s, "l_lo", c.l_lo);
      read(s, "cost_radius", c.cost_radius);
    }
    read(j, "downsample", c.downsample);
    if (j.contains("seed")) {
      const auto& s = j.at("seed");
      c.seed = s.is_string() ? std::stoull(s.get<std::string>()) : s.get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ConfigError(std::string("config: bad number: ") + e.what());
  }
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Resolution changes.

inline ScalarField average_pool(const ScalarField& img, int factor) {
  const GridDims d = img.dims();
  if (d.h % factor != 0 || d.w % factor != 0) {
    throw DataError("frame " + to_string(d) + " not divisible by downsample factor " + std::to_string(factor));
  }
  ScalarField out(GridDims{d.h / factor, d.w / factor});
  const float inv = 1.0f / static_cast<float>(factor * factor);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      float s = 0.0f;
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) s += img(y * factor + dy, x * factor + dx);
      }
      out(y, x) = s * inv;
    }
  }
  return out;
}

// Most frequent label per block; ties go to the smaller label value
// (NOC before OCC_IN before OCC_OUT).
inline OcclusionMap majority_pool(const OcclusionMap& labels, int factor) {
  const GridDims d = labels.dims();
  if (d.h % factor != 0 || d.w % factor != 0) {
    throw DataError("mask " + to_string(d) + " not divisible by downsample factor " + std::to_string(factor));
  }
  OcclusionMap out(GridDims{d.h / factor, d.w / factor}, labels.variant());
  for (int y = 0; y < out.dims().h; ++y) {
    for (int x = 0; x < out.dims().w; ++x) {
      int count[4] = {0, 0, 0, 0};
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) ++count[static_cast<int>(labels(y * factor + dy, x * factor + dx))];
      }
      int best = 0;
      for (int k = 1; k < 4; ++k) {
        if (count[k] > count[best]) best = k;
      }
      out.set(y, x, static_cast<Occlusion>(best));
    }
  }
  return out;
}

// Bilinear upsampling to `full` resolution; displacements scale by factor.
inline FlowField upsample_flow(const FlowField& flow, int factor, GridDims full) {
  CoordField at(full);
  const float f = static_cast<float>(factor);
  for (int y = 0; y < full.h; ++y) {
    for (int x = 0; x < full.w; ++x) {
      at(y, x) = Vec2{(static_cast<float>(x) + 0.5f) / f - 0.5f, (static_cast<float>(y) + 0.5f) / f - 0.5f};
    }
  }
  FlowField out = sample_bilinear(flow, at, Padding::kClamp);
  for (auto& v : out) v = f * v;
  return out;
}

// ---------------------------------------------------------------------------
// Running.

struct FramePair {
  ScalarField frame0;
  ScalarField frame1;
  std::optional<FlowField> gt_flow;
  std::optional<OcclusionMap> gt_occlusion;  // ground-truth variant
};

struct PipelineTimings {
  double features_ms = 0, flow0_ms = 0, loopback_ms = 0, distances_ms = 0, occ_in_ms = 0, refine_ms = 0,
         metrics_ms = 0, total_ms = 0;
};

struct PipelineResult {
  GridDims work_dims;  // resolution the pipeline ran at
  FlowField flow0;     // at input resolution
  FlowField refined;   // at input resolution
  LoopbackResult loopback;  // at working resolution
  ScalarField distances;
  SimilarityPair sims;
  OccInClassification occ_in;
  std::size_t rigid_used = 0;
  std::size_t rigid_fallback = 0;
  MatchingCostReport cost;
  std::optional<PartitionedAEPE> aepe_flow0;
  std::optional<PartitionedAEPE> aepe_refined;
  std::optional<OcclusionPRF> occlusion;
  PipelineTimings timings;
};

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Everything after feature extraction, at working resolution.
inline void run_core(const PipelineConfig& c, const FeatureSet& fs, PipelineResult& r, Stopwatch& sw) {
  const std::uint64_t count_before = thread_match_count();
  const float temperature =
      c.correlation_temperature > 0.0f ? c.correlation_temperature : default_temperature(fs.F0.depth());

  r.flow0 = match_flow(global_correlation(fs.F0, fs.F1, temperature, c.block_rows), c.match);
  r.timings.flow0_ms = sw.lap();

  r.loopback = run_loopback(fs.F0, fs.F1, r.flow0, c.match, c.tau_occ, temperature);
  r.cost = {thread_match_count() - count_before, 3};
  r.timings.loopback_ms = sw.lap();

  RigidFitCache fits(r.flow0, c.rotation, &r.loopback.occlusion, &fs.f0);
  r.distances = distance_field(r.loopback.pairs, c.distance, fits);
  r.timings.distances_ms = sw.lap();

  r.sims = similarity_pair(fs.f0, fs.f1, fs.F0, fs.F1, r.flow0);
  r.occ_in = classify_occ_in(r.sims, r.loopback.occlusion, c.g_hi, c.l_lo);
  r.timings.occ_in_ms = sw.lap();

  const LocalCostVolume volume = local_cost_volume(fs.f0, fs.f1, r.flow0, c.cost_radius);
  RefinementInputs in;
  in.flow0 = &r.flow0;
  in.loopback = &r.loopback;
  in.distances = &r.distances;
  in.distance_mode = c.distance;
  in.occ_in = &r.occ_in.flags;
  in.cost_volume = &volume;
  in.sims = &r.sims;
  in.fits = &fits;
  const RefinementFields fields = refinement_fields(in, c.refiner);
  r.refined = fuse(r.flow0, fields.weight, fields.residual);
  r.rigid_used = fields.rigid_used;
  r.rigid_fallback = fields.rigid_fallback;
  r.timings.refine_ms = sw.lap();
}

}  // namespace detail

inline PipelineResult run_pipeline(const PipelineConfig& c, const FramePair& frames) {
  validate(c);
  if (c.features.kind == FeatureKind::kOracle) throw ConfigError("oracle features need a scene, not frame files");
  require_same_dims(frames.frame0.dims(), frames.frame1.dims(), "frame pair");
  if (frames.gt_flow) require_same_dims(frames.gt_flow->dims(), frames.frame0.dims(), "ground-truth flow");
  if (frames.gt_occlusion) require_same_dims(frames.gt_occlusion->dims(), frames.frame0.dims(), "occlusion mask");
  if (!all_finite(frames.frame0) || !all_finite(frames.frame1)) throw DataError("frames contain non-finite values");

  detail::Stopwatch total;
  detail::Stopwatch sw;
  PipelineResult r;
  const GridDims full = frames.frame0.dims();
  const int k = c.downsample;
  const ScalarField f0 = k > 1 ? average_pool(frames.frame0, k) : frames.frame0;
  const ScalarField f1 = k > 1 ? average_pool(frames.frame1, k) : frames.frame1;
  r.work_dims = f0.dims();
  const FeatureSet fs = image_features(f0, f1, c.features);
  r.timings.features_ms = sw.lap();

  detail::run_core(c, fs, r, sw);
  if (k > 1) {
    r.flow0 = upsample_flow(r.flow0, k, full);
    r.refined = upsample_flow(r.refined, k, full);
  }
  if (frames.gt_flow) {
    const OcclusionMap labels =
        frames.gt_occlusion ? *frames.gt_occlusion : OcclusionMap(full, OcclusionVariant::kGroundTruth);
    r.aepe_flow0 = aepe_partitioned(r.flow0, *frames.gt_flow, labels);
    r.aepe_refined = aepe_partitioned(r.refined, *frames.gt_flow, labels);
  }
  if (frames.gt_occlusion) {
    const OcclusionMap gt = k > 1 ? majority_pool(*frames.gt_occlusion, k) : *frames.gt_occlusion;
    r.occlusion = occlusion_prf(r.loopback.occlusion, gt);
  }
  r.timings.metrics_ms = sw.lap();
  r.timings.total_ms = total.lap();
  return r;
}

inline PipelineResult run_pipeline(const PipelineConfig& c, const SceneRender& scene) {
  validate(c);
  if (c.features.kind != FeatureKind::kOracle) {
    return run_pipeline(c, FramePair{scene.frame0, scene.frame1, scene.gt_flow, scene.gt_occlusion});
  }
  detail::Stopwatch total;
  detail::Stopwatch sw;
  PipelineResult r;
  r.work_dims = scene.frame0.dims();
  const FeatureSet fs = oracle_features(scene, c.features);
  r.timings.features_ms = sw.lap();
  detail::run_core(c, fs, r, sw);
  r.aepe_flow0 = aepe_partitioned(r.flow0, scene.gt_flow, scene.gt_occlusion);
  r.aepe_refined = aepe_partitioned(r.refined, scene.gt_flow, scene.gt_occlusion);
  r.occlusion = occlusion_prf(r.loopback.occlusion, scene.gt_occlusion);
  r.timings.metrics_ms = sw.lap();
  r.timings.total_ms = total.lap();
  return r;
}

}  // namespace loopflow
