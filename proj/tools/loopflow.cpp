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

// loopflow command-line tool.
//
//   loopflow gen   --out DIR [--seed N] [--scene NAME]
//   loopflow run   (--scene NAME|all | --scene-file F | --sintel DIR) [--config F] [overrides] [--out DIR]
//   loopflow eval  --pred F --gt F [--occ PNG]
//   loopflow viz   --flow F --out PNG [--max-norm X]
//   loopflow bench [--scene NAME|all] [--repeat N] [--config F] [overrides]
//
// Exit codes: 0 ok, 1 configuration error, 2 data error, 3 invariant
// violation or internal failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "loopflow.hpp"
#include "loopflow/png_io.hpp"
#include "loopflow/sintel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace loopflow;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text << '\n';
}

// Flag overrides applied on top of the JSON config; unset flags leave the
// config alone.
struct Overrides {
  std::string config_path;
  std::optional<std::string> features, match, distance, form, refiner, noc;
  std::optional<float> tau_occ, g_hi, l_lo;
  std::optional<int> window_k, downsample, cost_radius;
  std::optional<double> d_max, fit_tol;
  bool inject_occ_in = false;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--features", features, "oracle | census | patch");
    app->add_option("--match", match, "argmax | softargmax");
    app->add_option("--distance", distance, "none | euclidean | uniform_law");
    app->add_option("--form", form, "literal | radial");
    app->add_option("--refiner", refiner, "copy_reference | rigid_model | off");
    app->add_option("--noc", noc, "keep | local_correct");
    app->add_option("--tau-occ", tau_occ, "loopback occlusion threshold (px)");
    app->add_option("--g-hi", g_hi, "occ_in global similarity threshold");
    app->add_option("--l-lo", l_lo, "occ_in local similarity threshold");
    app->add_option("--window-k", window_k, "rigid fit window (odd)");
    app->add_option("--d-max", d_max, "rigid prediction distance limit");
    app->add_option("--fit-tol", fit_tol, "rigid fit residual limit");
    app->add_option("--cost-radius", cost_radius, "local cost volume radius");
    app->add_option("--downsample", downsample, "working resolution factor (image features)");
    app->add_flag("--inject-occ-in", inject_occ_in, "oracle occ_in injection");
    app->add_option("--seed", seed, "suite seed");
  }

  PipelineConfig resolve() const {
    json j = config_path.empty() ? json::object() : read_json_file(config_path);
    PipelineConfig c = config_from_json(j);
    if (features) c.features.kind = parse_feature_kind(*features);
    if (match) c.match.kind = parse_match_kind(*match);
    if (distance) c.distance = parse_distance_mode(*distance);
    if (form) c.rotation.form = parse_uniform_form(*form);
    if (refiner) c.refiner.kind = parse_refiner(*refiner);
    if (noc) c.refiner.noc = parse_noc_handling(*noc);
    if (tau_occ) c.tau_occ = *tau_occ;
    if (g_hi) c.g_hi = *g_hi;
    if (l_lo) c.l_lo = *l_lo;
    if (window_k) c.rotation.window_k = *window_k;
    if (d_max) c.refiner.d_max = *d_max;
    if (fit_tol) c.refiner.fit_tol = *fit_tol;
    if (cost_radius) c.cost_radius = *cost_radius;
    if (downsample) c.downsample = *downsample;
    if (inject_occ_in) c.features.inject_occ_in = true;
    if (seed) c.seed = *seed;
    validate(c);
    return c;
  }
};

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json aepe_json(const std::optional<PartitionedAEPE>& a) {
  if (!a) return nullptr;
  json j;
  const std::pair<const char*, const RegionError*> regions[] = {
      {"all", &a->all}, {"noc", &a->noc}, {"occ", &a->occ}, {"occ_in", &a->occ_in}, {"occ_out", &a->occ_out}};
  for (const auto& [name, r] : regions) j[name] = {{"aepe", optional_number(r->aepe)}, {"count", r->count}};
  return j;
}

std::string table_cell(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

// Rows Noc / Occ / Occ-in / Occ-out / All, one AEPE column per flow.
std::string aepe_table(const std::vector<std::pair<std::string, const PartitionedAEPE*>>& columns) {
  const char* rows[] = {"Noc", "Occ", "Occ-in", "Occ-out", "All"};
  auto pick = [](const PartitionedAEPE& a, int k) -> const RegionError& {
    const RegionError* r[] = {&a.noc, &a.occ, &a.occ_in, &a.occ_out, &a.all};
    return *r[k];
  };
  std::ostringstream os;
  os << std::left << std::setw(9) << "region";
  for (const auto& [name, a] : columns) os << std::right << std::setw(11) << name;
  os << std::right << std::setw(9) << "pixels" << '\n';
  for (int k = 0; k < 5; ++k) {
    os << std::left << std::setw(9) << rows[k];
    for (const auto& [name, a] : columns) os << std::right << std::setw(11) << table_cell(pick(*a, k).aepe);
    os << std::right << std::setw(9) << pick(*columns.front().second, k).count << '\n';
  }
  return os.str();
}

json result_json(const std::string& name, const PipelineResult& r) {
  json j;
  j["name"] = name;
  j["aepe_flow0"] = aepe_json(r.aepe_flow0);
  j["aepe_refined"] = aepe_json(r.aepe_refined);
  if (r.occlusion) {
    const auto& o = *r.occlusion;
    j["occlusion"] = {{"tp", o.tp},
                      {"fp", o.fp},
                      {"fn", o.fn},
                      {"tn", o.tn},
                      {"precision", optional_number(o.precision)},
                      {"recall", optional_number(o.recall)},
                      {"f1", optional_number(o.f1)}};
  } else {
    j["occlusion"] = nullptr;
  }
  j["occ_in_flagged"] = r.occ_in.flagged;
  j["occ_in_flagged_loopback_noc"] = r.occ_in.flagged_loopback_noc;
  j["rigid_used"] = r.rigid_used;
  j["rigid_fallback"] = r.rigid_fallback;
  j["global_match_count"] = r.cost.global_match_count;
  return j;
}

json timings_json(const PipelineTimings& t) {
  return {{"features_ms", t.features_ms}, {"flow0_ms", t.flow0_ms},     {"loopback_ms", t.loopback_ms},
          {"distances_ms", t.distances_ms}, {"occ_in_ms", t.occ_in_ms}, {"refine_ms", t.refine_ms},
          {"metrics_ms", t.metrics_ms},   {"total_ms", t.total_ms}};
}

std::vector<SceneSpec> select_scenes(const std::string& name, std::uint64_t seed) {
  std::vector<SceneSpec> suite = standard_suite(seed);
  if (name == "all") return suite;
  const SceneSpec* s = find_scene(suite, name);
  if (s == nullptr) {
    std::string names;
    for (const auto& x : suite) names += " " + x.name;
    throw ConfigError("unknown scene '" + name + "'; available:" + names + " all");
  }
  return {*s};
}

void write_outputs(const fs::path& dir, const PipelineResult& r) {
  fs::create_directories(dir);
  flo_write((dir / "flow0.flo").string(), r.flow0);
  flo_write((dir / "refined.flo").string(), r.refined);
  write_png((dir / "occlusion.png").string(), occlusion_to_mask(r.loopback.occlusion));
}

void write_scene(const fs::path& dir, const SceneRender& r) {
  fs::create_directories(dir / "flow");
  fs::create_directories(dir / "occlusions");
  write_text(dir / "scene.json", to_json(r.spec).dump(2));
  write_png((dir / "frame_0001.png").string(), to_gray8(r.frame0));
  write_png((dir / "frame_0002.png").string(), to_gray8(r.frame1));
  flo_write((dir / "flow" / "frame_0001.flo").string(), r.gt_flow);
  write_png((dir / "occlusions" / "frame_0001.png").string(), occlusion_to_mask(r.gt_occlusion));
}

// Runs scenes concurrently; results come back in suite order.
std::vector<PipelineResult> run_scenes(const PipelineConfig& c, const std::vector<SceneSpec>& specs) {
  std::vector<std::future<PipelineResult>> jobs;
  for (const auto& s : specs) {
    jobs.push_back(std::async(std::launch::async, [&c, &s] {
      const SceneRender r = render(s);
      const auto bad = check_render(r);
      if (!bad.empty()) throw InvariantError("scene " + s.name + ": " + bad.front());
      return run_pipeline(c, r);
    }));
  }
  std::vector<PipelineResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Loopback-judgment occlusion-aware optical flow on synthetic scenes and Sintel-layout data"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Write suite scenes in Sintel layout plus scene.json");
  std::string gen_out;
  std::string gen_scene = "all";
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--scene", gen_scene, "scene name or 'all'");
  gen->add_option("--seed", gen_seed, "suite seed");

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  Overrides run_ov;
  run_ov.attach(run);
  std::string run_scene, run_scene_file, run_sintel, run_out;
  auto* g_scene = run->add_option("--scene", run_scene, "suite scene name or 'all'");
  auto* g_file = run->add_option("--scene-file", run_scene_file, "scene JSON")->check(CLI::ExistingFile);
  auto* g_sintel = run->add_option("--sintel", run_sintel, "Sintel-layout directory")->check(CLI::ExistingDirectory);
  g_scene->excludes(g_file, g_sintel);
  g_file->excludes(g_sintel);
  run->add_option("--out", run_out, "write flow0.flo, refined.flo, occlusion.png here");
  bool run_table = false;
  run->add_flag("--table", run_table, "print AEPE tables instead of JSON");

  // eval
  auto* eval = app.add_subcommand("eval", "Partitioned AEPE of a stored flow");
  std::string eval_pred, eval_gt, eval_occ;
  eval->add_option("--pred", eval_pred, "predicted .flo")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_gt, "ground-truth .flo")->required()->check(CLI::ExistingFile);
  eval->add_option("--occ", eval_occ, "occlusion mask PNG (0 occluded, 128 occ_in, 255 noc)")
      ->check(CLI::ExistingFile);
  bool eval_table = false;
  eval->add_flag("--table", eval_table, "print an AEPE table instead of JSON");

  // viz
  auto* viz = app.add_subcommand("viz", "Render a .flo as a color PNG");
  std::string viz_flow, viz_out;
  float viz_max = 0.0f;
  viz->add_option("--flow", viz_flow, "input .flo")->required()->check(CLI::ExistingFile);
  viz->add_option("--out", viz_out, "output PNG")->required();
  viz->add_option("--max-norm", viz_max, "saturation magnitude (default: max |flow|)");

  // bench
  auto* bench = app.add_subcommand("bench", "Module timings and matching counts");
  Overrides bench_ov;
  bench_ov.attach(bench);
  std::string bench_scene = "all";
  int bench_repeat = 3;
  bench->add_option("--scene", bench_scene, "scene name or 'all'");
  bench->add_option("--repeat", bench_repeat, "runs per scene")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (gen->parsed()) {
    for (const auto& s : select_scenes(gen_scene, gen_seed)) {
      const SceneRender r = render(s);
      write_scene(fs::path(gen_out) / s.name, r);
      std::cout << s.name << '\n';
    }
    return 0;
  }

  if (run->parsed()) {
    const PipelineConfig c = run_ov.resolve();
    std::string table;
    auto add_table = [&](const std::string& name, const PipelineResult& r) {
      table += name + '\n';
      if (r.aepe_flow0 && r.aepe_refined) {
        table += aepe_table({{"flow0", &*r.aepe_flow0}, {"refined", &*r.aepe_refined}});
      } else {
        table += "no ground truth\n";
      }
    };
    json out;
    out["config"] = to_json(c);
    out["results"] = json::array();
    if (!run_sintel.empty()) {
      const PipelineResult r = run_pipeline(c, load_sintel_pair(run_sintel));
      out["results"].push_back(result_json(fs::path(run_sintel).filename().string(), r));
      add_table(fs::path(run_sintel).filename().string(), r);
      if (!run_out.empty()) write_outputs(run_out, r);
    } else {
      std::vector<SceneSpec> specs;
      if (!run_scene_file.empty()) {
        specs.push_back(scene_from_json(read_json_file(run_scene_file)));
      } else {
        specs = select_scenes(run_scene.empty() ? "all" : run_scene, c.seed);
      }
      const auto results = run_scenes(c, specs);
      for (std::size_t k = 0; k < specs.size(); ++k) {
        out["results"].push_back(result_json(specs[k].name, results[k]));
        add_table(specs[k].name, results[k]);
        if (!run_out.empty()) {
          write_outputs(specs.size() == 1 ? fs::path(run_out) : fs::path(run_out) / specs[k].name, results[k]);
        }
      }
    }
    std::cout << (run_table ? table : out.dump(2) + '\n');
    return 0;
  }

  if (eval->parsed()) {
    const FlowField pred = flo_read(eval_pred);
    const FlowField gt = flo_read(eval_gt);
    require_same_dims(pred.dims(), gt.dims(), "eval pred vs gt");
    OcclusionMap labels(gt.dims(), OcclusionVariant::kGroundTruth);
    if (!eval_occ.empty()) labels = mask_to_occlusion(read_png(eval_occ), &gt);
    const PartitionedAEPE a = aepe_partitioned(pred, gt, labels);
    if (eval_table) {
      std::cout << aepe_table({{"aepe", &a}});
    } else {
      std::cout << json{{"aepe", aepe_json(a)}}.dump(2) << '\n';
    }
    return 0;
  }

  if (viz->parsed()) {
    const FlowField f = flo_read(viz_flow);
    float m = viz_max;
    if (m <= 0.0f) {
      for (const Vec2 v : f) m = std::max(m, norm(v));
      if (m <= 0.0f) m = 1.0f;
    }
    write_png(viz_out, flow_to_rgb(f, m));
    return 0;
  }

  if (bench->parsed()) {
    const PipelineConfig c = bench_ov.resolve();
    json out;
    out["results"] = json::array();
    for (const auto& s : select_scenes(bench_scene, c.seed)) {
      const SceneRender r = render(s);
      PipelineTimings best;
      std::uint64_t count = 0;
      for (int k = 0; k < bench_repeat; ++k) {
        const PipelineResult res = run_pipeline(c, r);
        count = res.cost.global_match_count;
        if (k == 0 || res.timings.total_ms < best.total_ms) best = res.timings;
      }
      out["results"].push_back({{"name", s.name},
                                {"global_match_count", count},
                                {"bidirectional_equivalent_count", MatchingCostReport{}.bidirectional_equivalent_count},
                                {"best_timings", timings_json(best)}});
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
}
