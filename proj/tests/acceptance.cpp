// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "loopflow.hpp"

namespace {

using namespace loopflow;

constexpr std::uint64_t kSeed = 7;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<SceneRender>& suite() {
  static const std::vector<SceneRender> renders = [] {
    std::vector<SceneRender> v;
    for (const auto& s : standard_suite(kSeed)) v.push_back(render(s));
    return v;
  }();
  return renders;
}

const SceneRender& scene(const std::string& name) {
  for (const auto& r : suite()) {
    if (r.spec.name == name) return r;
  }
  throw std::out_of_range(name);
}

// Every metric computed here is also checked for the AEPE identities.
double worst_decomposition = 0.0;
std::size_t evaluations = 0;

PipelineResult run(const PipelineConfig& c, const SceneRender& r) {
  PipelineResult res = run_pipeline(c, r);
  for (const auto& a : {res.aepe_flow0, res.aepe_refined}) {
    if (a) {
      worst_decomposition = std::max(worst_decomposition, decomposition_error(*a));
      ++evaluations;
    }
  }
  return res;
}

PipelineConfig config(RefinerKind kind = RefinerKind::kRigidModel, DistanceMode dist = DistanceMode::kUniformLaw) {
  PipelineConfig c;
  c.refiner.kind = kind;
  c.distance = dist;
  return c;
}

bool bit_equal(Vec2 a, Vec2 b) {
  return std::bit_cast<std::uint32_t>(a.x) == std::bit_cast<std::uint32_t>(b.x) &&
         std::bit_cast<std::uint32_t>(a.y) == std::bit_cast<std::uint32_t>(b.y);
}

// Default pipeline runs over the suite, shared by several criteria.
std::vector<PipelineResult> default_runs;
double default_suite_ms = 0.0;

Outcome loopback_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& r : suite()) default_runs.push_back(run(config(), r));
  default_suite_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  std::size_t mismatched = 0, total = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < suite().size(); ++k) {
    const OcclusionMap gt = suite()[k].gt_occlusion.binarized();
    const OcclusionMap& est = default_runs[k].loopback.occlusion;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      ++total;
      mismatched += est[i] != gt[i];
      tp += est.occluded(i) && gt.occluded(i);
      fp += est.occluded(i) && !gt.occluded(i);
      fn += !est.occluded(i) && gt.occluded(i);
    }
  }
  const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  const bool pass = mismatched == 0 && f1 == 1.0 && default_suite_ms < 10000.0;
  return {pass, fmt("%zu/%zu pixels mismatched, pooled f1 %.6f, suite %.0f ms", mismatched, total, f1,
                    default_suite_ms)};
}

// Brute-force double-precision maximizers, written without the library's
// correlation or matching code. The position code is symmetric, so exact
// ties occur; every key within `tol` of the best score is returned.
std::vector<std::size_t> brute_argmax_set(std::span<const float> q, const FeatureMap& keys, double tol = 1e-6) {
  std::vector<double> score(keys.dims().size());
  double best = -1e300;
  for (std::size_t k = 0; k < score.size(); ++k) {
    const auto d = keys.at(k);
    double v = 0.0;
    for (std::size_t c = 0; c < d.size(); ++c) v += static_cast<double>(q[c]) * d[c];
    score[k] = v;
    best = std::max(best, v);
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < score.size(); ++k) {
    if (score[k] >= best - tol) out.push_back(k);
  }
  return out;
}

Outcome reference_reliability() {
  std::size_t checked = 0, good = 0, oracle_disagree = 0, tied = 0;
  for (std::size_t s = 0; s < suite().size(); ++s) {
    const SceneRender& r = suite()[s];
    const PipelineResult& res = default_runs[s];
    const FeatureSet fs = oracle_features(r, FeatureProviderSpec{});
    const GridDims d = r.frame0.dims();
    std::vector<bool> visible(static_cast<std::size_t>(r.object_count()), false);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (r.gt_occlusion[i] == Occlusion::kNoc) visible[static_cast<std::size_t>(r.object_id0[i])] = true;
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!res.loopback.occlusion.occluded(i) || !visible[static_cast<std::size_t>(r.object_id0[i])]) continue;
      ++checked;
      // Every reference the oracle could produce under some tie-break.
      std::vector<std::size_t> refs;
      for (const std::size_t fwd : brute_argmax_set(fs.F0.at(i), fs.F1)) {
        for (const std::size_t back : brute_argmax_set(fs.F1.at(fwd), fs.F0)) refs.push_back(back);
      }
      tied += refs.size() > 1;
      const Vec2 pair = res.loopback.pairs[i];
      const std::size_t pi = d.index(static_cast<int>(pair.y), static_cast<int>(pair.x));
      if (std::find(refs.begin(), refs.end(), pi) == refs.end()) ++oracle_disagree;
      const bool all_good = std::all_of(refs.begin(), refs.end(), [&](std::size_t b) {
        return r.gt_occlusion[b] == Occlusion::kNoc && r.object_id0[b] == r.object_id0[i];
      });
      good += all_good;
    }
  }
  return {checked > 0 && good == checked && oracle_disagree == 0,
          fmt("%zu/%zu occluded pixels pair with a visible point of their object (%zu with exact ties); %zu outside "
              "the brute-force set",
              good, checked, tied, oracle_disagree)};
}

std::vector<std::uint64_t> all_counts;

Outcome exactly_two_matches() {
  std::size_t runs = 0, bad = 0;
  for (const auto& res : default_runs) all_counts.push_back(res.cost.global_match_count);
  for (const auto c : all_counts) {
    ++runs;
    bad += c != 2;
  }
  return {runs > 0 && bad == 0, fmt("%zu pipeline runs, %zu with a count other than 2", runs, bad)};
}

Outcome rotation_error_behavior() {
  const SceneRender& r = scene("rotating_band");
  const PipelineResult copy = run(config(RefinerKind::kCopyReference), r);
  const PipelineResult rigid = run(config(RefinerKind::kRigidModel), r);
  all_counts.push_back(copy.cost.global_match_count);
  all_counts.push_back(rigid.cost.global_match_count);
  // The default distance is the literal uniform-law form.
  const ScalarField& dist = copy.distances;
  std::vector<double> epe, dd;
  for (std::size_t i = 0; i < r.gt_flow.size(); ++i) {
    if (!r.gt_occlusion.occluded(i)) continue;
    epe.push_back(endpoint_error(copy.refined[i], r.gt_flow[i]));
    dd.push_back(dist[i]);
  }
  const double rho = pearson(epe, dd).value_or(0.0);
  const double c_occ = copy.aepe_refined->occ.aepe.value_or(0.0);
  const double m_occ = rigid.aepe_refined->occ.aepe.value_or(1e9);
  return {rho > 0.8 && m_occ < 0.5 && m_occ < 0.2 * c_occ,
          fmt("Pearson %.3f over %zu occ pixels; occ AEPE copy %.3f, rigid %.3f (%.1f%%)", rho, epe.size(), c_occ,
              m_occ, 100.0 * m_occ / c_occ)};
}

Outcome distance_ordering() {
  bool ordered = true, strict = false;
  std::string detail;
  for (const auto& r : suite()) {
    if (!has_rotation(r.spec)) continue;
    double occ[3];
    const DistanceMode modes[3] = {DistanceMode::kUniformLaw, DistanceMode::kEuclidean, DistanceMode::kNone};
    for (int k = 0; k < 3; ++k) {
      const PipelineResult res = run(config(RefinerKind::kRigidModel, modes[k]), r);
      all_counts.push_back(res.cost.global_match_count);
      occ[k] = res.aepe_refined->occ.aepe.value_or(0.0);
    }
    ordered = ordered && occ[0] <= occ[1] && occ[1] <= occ[2];
    strict = strict || occ[0] < occ[1];
    detail += fmt("%s %.3f/%.3f/%.3f; ", r.spec.name.c_str(), occ[0], occ[1], occ[2]);
  }
  return {ordered && strict, detail + "(uniform/euclidean/none occ AEPE)"};
}

Outcome non_damage() {
  std::size_t scenes = 0, bad = 0;
  for (std::size_t s = 0; s < suite().size(); ++s) {
    const PipelineResult& res = default_runs[s];
    ++scenes;
    const auto a = res.aepe_flow0->noc, b = res.aepe_refined->noc;
    bool same = a.count == b.count && a.aepe == b.aepe;
    for (std::size_t i = 0; i < res.flow0.size(); ++i) {
      if (suite()[s].gt_occlusion[i] == Occlusion::kNoc) same = same && bit_equal(res.flow0[i], res.refined[i]);
    }
    bad += !same;
  }
  return {bad == 0, fmt("%zu/%zu scenes with refined NOC AEPE bit-identical to flow0", scenes - bad, scenes)};
}

Outcome occ_in_handling() {
  const SceneRender& r = scene("occ_in_cover");
  PipelineConfig c = config();
  c.features.inject_occ_in = true;
  const PipelineResult res = run(c, r);
  all_counts.push_back(res.cost.global_match_count);
  std::size_t tp = 0, fp = 0, fn = 0, modified = 0;
  for (std::size_t i = 0; i < r.gt_occlusion.size(); ++i) {
    const bool flag = res.occ_in.flags[i] != 0;
    const bool truth = r.gt_occlusion[i] == Occlusion::kOccIn;
    tp += flag && truth;
    fp += flag && !truth;
    fn += !flag && truth;
    if (flag && !bit_equal(res.refined[i], res.flow0[i])) ++modified;
  }
  const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  const double rc = tp + fn ? double(tp) / double(tp + fn) : 0.0;
  return {p == 1.0 && rc == 1.0 && modified == 0,
          fmt("precision %.4f recall %.4f over %zu occ_in pixels; %zu flagged pixels modified", p, rc, tp + fn,
              modified)};
}

Outcome rigid_fit_accuracy() {
  struct Case {
    double theta, cx, cy;
  };
  const Case cases[] = {{0.05, 31.5, 31.5}, {0.1, 10, 50},    {0.3, 45, 20},
                        {0.05, -60, 100},   {0.1, 120, -30},  {0.3, -20, -20}};
  const GridDims d{64, 64};
  double worst_theta = 0.0, worst_center = 0.0;
  for (const auto& c : cases) {
    FlowField f(d);
    const double cs = std::cos(c.theta), sn = std::sin(c.theta);
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        const double qx = cs * (x - c.cx) - sn * (y - c.cy) + c.cx;
        const double qy = sn * (x - c.cx) + cs * (y - c.cy) + c.cy;
        f(y, x) = Vec2{static_cast<float>(qx - x), static_cast<float>(qy - y)};
      }
    }
    for (const Vec2 a : {Vec2{32, 32}, Vec2{8, 8}, Vec2{56, 40}}) {
      const RigidMotion2D m = fit_rigid_motion(f, a, 31);
      if (m.degenerate || !m.center) return {false, "analytic rotation reported degenerate"};
      worst_theta = std::max(worst_theta, std::abs(m.theta - c.theta));
      worst_center = std::max(worst_center, std::hypot(m.center->x - c.cx, m.center->y - c.cy));
    }
  }
  const RigidMotion2D t = fit_rigid_motion(FlowField(d, Vec2{3.0f, -2.0f}), Vec2{32, 32}, 31);
  return {worst_theta <= 1e-3 && worst_center <= 0.5 && t.degenerate && !t.center,
          fmt("max |dtheta| %.2e rad, max center error %.3f px, translation degenerate: %s", worst_theta,
              worst_center, t.degenerate ? "yes" : "no")};
}

Outcome cost_volume_contract() {
  const bool channels = LocalCostVolume(GridDims{8, 8}, 3).channels() == 49;
  const Vec2 offsets[] = {{2, -1}, {-3, 3}, {0, 1}, {3, 0}};
  std::size_t ok = 0, total = 0;
  for (std::size_t s = 0; s < suite().size(); ++s) {
    const SceneRender& r = suite()[s];
    const FeatureSet fs = oracle_features(r, FeatureProviderSpec{});
    for (const Vec2 o : offsets) {
      FlowField perturbed = default_runs[s].flow0;
      for (auto& v : perturbed) v = v + o;
      const FlowField c = local_flow_correction(local_cost_volume(fs.f0, fs.f1, perturbed, 3));
      for (int y = 3; y < r.frame0.height() - 3; ++y) {
        for (int x = 3; x < r.frame0.width() - 3; ++x) {
          if (r.gt_occlusion(y, x) != Occlusion::kNoc) continue;
          ++total;
          ok += c(y, x) == Vec2{-o.x, -o.y};
        }
      }
    }
  }
  const double rate = total ? double(ok) / double(total) : 0.0;
  return {channels && rate >= 0.99,
          fmt("radius 3 -> %s channels; offset recovered at %.4f of %zu interior NOC pixels",
              channels ? "49" : "wrong", rate, total)};
}

Outcome io_and_identities() {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> side(1, 32);
  std::uniform_real_distribution<float> u(-500.0f, 500.0f);
  std::size_t bad_flo = 0;
  for (int k = 0; k < 1000; ++k) {
    FlowField f(GridDims{side(rng), side(rng)});
    for (auto& v : f) v = Vec2{u(rng), u(rng)};
    const FlowField g = flo_decode(flo_encode(f));
    bool same = g.dims().h == f.dims().h && g.dims().w == f.dims().w;
    for (std::size_t i = 0; same && i < f.size(); ++i) same = bit_equal(f[i], g[i]);
    bad_flo += !same;
  }
  std::size_t nondeterministic = 0;
  for (std::size_t s = 0; s < suite().size(); ++s) {
    const PipelineResult again = run(config(), suite()[s]);
    all_counts.push_back(again.cost.global_match_count);
    const PipelineResult& first = default_runs[s];
    const bool same = again.flow0 == first.flow0 && again.refined == first.refined &&
                      again.loopback.occlusion == first.loopback.occlusion && again.distances == first.distances &&
                      again.occ_in.flags == first.occ_in.flags;
    nondeterministic += !same;
  }
  return {bad_flo == 0 && worst_decomposition <= 1e-6 && nondeterministic == 0 && evaluations > 0,
          fmt(".flo mismatches %zu/1000; worst AEPE identity error %.2e over %zu evaluations; %zu non-deterministic "
              "scenes",
              bad_flo, worst_decomposition, evaluations, nondeterministic)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  // Order matters: later criteria reuse the default suite runs and the
  // match counts collected by earlier ones.
  const std::vector<Criterion> order = {
      {1, "loopback occlusion exactness", loopback_exactness},
      {2, "reference reliability", reference_reliability},
      {4, "rotation error behavior", rotation_error_behavior},
      {5, "distance gating ordering", distance_ordering},
      {6, "non-damage on NOC pixels", non_damage},
      {7, "occ_in handling", occ_in_handling},
      {8, "rigid-fit accuracy", rigid_fit_accuracy},
      {9, "local cost volume contract", cost_volume_contract},
      {10, "I/O and metric identities", io_and_identities},
      {3, "exactly two global matchings per run", exactly_two_matches},
  };
  std::vector<std::pair<int, std::string>> lines;
  int failures = 0;
  for (const auto& c : order) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    lines.emplace_back(c.id, fmt("%s criterion %d (%s): %s", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str()));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d/%zu criteria passed\n", static_cast<int>(lines.size()) - failures, lines.size());
  return failures == 0 ? 0 : 1;
}
