#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
};

CliResult cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "loopflow_cli_stdout.txt";
  const std::string cmd = std::string(LOOPFLOW_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("loopflow_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Cli, RunReportsMetricsAsJson) {
  const CliResult r = cli("run --scene occ_in_cover --inject-occ-in");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["results"].size(), 1u);
  EXPECT_EQ(j["results"][0]["global_match_count"], 2);
  EXPECT_EQ(j["results"][0]["occlusion"]["f1"], 1.0);
  EXPECT_TRUE(j["config"]["features"]["inject_occ_in"].get<bool>());
}

TEST(Cli, TableListsEveryRegion) {
  const CliResult r = cli("run --scene static_square --table");
  ASSERT_EQ(r.code, 0);
  for (const char* row : {"Noc ", "Occ ", "Occ-in ", "Occ-out ", "All "}) {
    EXPECT_NE(r.out.find(std::string("\n") + row), std::string::npos) << row;
  }
  // static_square has no occluded pixels.
  EXPECT_NE(r.out.find("undefined"), std::string::npos);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "c.json") << R"({"refine": {"strategy": "off", "d_max": 5}})";
  const CliResult r = cli("run --scene static_square --config " + (dir / "c.json").string() + " --refiner copy_reference");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["config"]["refine"]["strategy"], "copy_reference");
  EXPECT_EQ(j["config"]["refine"]["d_max"], 5.0);
}

TEST(Cli, GenThenRunSintelThenEval) {
  const fs::path dir = scratch("gen");
  ASSERT_EQ(cli("gen --scene translate_square --out " + dir.string()).code, 0);
  const fs::path scene = dir / "translate_square";
  EXPECT_TRUE(fs::exists(scene / "scene.json"));
  EXPECT_TRUE(fs::exists(scene / "flow" / "frame_0001.flo"));
  const CliResult run = cli("run --sintel " + scene.string() + " --features census --out " + (dir / "out").string());
  ASSERT_EQ(run.code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "refined.flo"));
  const CliResult eval = cli("eval --pred " + (dir / "out" / "refined.flo").string() + " --gt " +
                             (scene / "flow" / "frame_0001.flo").string() + " --occ " +
                             (scene / "occlusions" / "frame_0001.png").string());
  ASSERT_EQ(eval.code, 0);
  EXPECT_TRUE(nlohmann::json::parse(eval.out)["aepe"]["noc"]["aepe"].is_number());
  EXPECT_EQ(cli("viz --flow " + (dir / "out" / "flow0.flo").string() + " --out " + (dir / "f.png").string()).code, 0);
  EXPECT_TRUE(fs::exists(dir / "f.png"));
  const CliResult scene_run = cli("run --scene-file " + (scene / "scene.json").string());
  ASSERT_EQ(scene_run.code, 0);
  EXPECT_EQ(nlohmann::json::parse(scene_run.out)["results"][0]["name"], "translate_square");
}

TEST(Cli, BenchReportsMatchingCounts) {
  const CliResult r = cli("bench --scene static_square --repeat 1");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["results"][0]["global_match_count"], 2);
  EXPECT_EQ(j["results"][0]["bidirectional_equivalent_count"], 3);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("run --scene no_such_scene").code, 1);
  EXPECT_EQ(cli("run --scene static_square --window-k 4").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  const fs::path dir = scratch("codes");
  std::ofstream(dir / "bad.flo") << "not a flow file";
  EXPECT_EQ(cli("viz --flow " + (dir / "bad.flo").string() + " --out " + (dir / "x.png").string()).code, 2);
  std::ofstream(dir / "bad.json") << "{";
  EXPECT_EQ(cli("run --scene-file " + (dir / "bad.json").string()).code, 2);
  std::ofstream(dir / "unknown.json") << R"({"nope": 1})";
  EXPECT_EQ(cli("run --scene static_square --config " + (dir / "unknown.json").string()).code, 1);
}

}  // namespace
