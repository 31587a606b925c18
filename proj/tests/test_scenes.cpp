#include <gtest/gtest.h>

#include <set>

#include "loopflow/scene_io.hpp"
#include "loopflow/scenes.hpp"
#include "support.hpp"

namespace loopflow {
namespace {

using testing::suite_renders;
using testing::suite_scene;

TEST(Suite, HasTheRequiredScenes) {
  const auto suite = standard_suite(0);
  ASSERT_EQ(suite.size(), 8u);
  std::set<std::string> names;
  int rotating = 0;
  for (const auto& s : suite) {
    names.insert(s.name);
    rotating += has_rotation(s);
    EXPECT_NO_THROW(validate(s));
  }
  EXPECT_EQ(names.size(), 8u);
  EXPECT_EQ(rotating, 4);
}

TEST(Suite, RendersSatisfyTheirInvariants) {
  for (const auto& r : suite_renders()) {
    const auto bad = check_render(r);
    EXPECT_TRUE(bad.empty()) << r.spec.name << ": " << (bad.empty() ? "" : bad.front());
  }
}

TEST(Suite, EveryPixelHasExactlyOneGroundTruthLabel) {
  for (const auto& r : suite_renders()) {
    std::size_t noc = 0, in = 0, out = 0;
    for (std::size_t i = 0; i < r.gt_occlusion.size(); ++i) {
      const Occlusion l = r.gt_occlusion[i];
      noc += l == Occlusion::kNoc;
      in += l == Occlusion::kOccIn;
      out += l == Occlusion::kOccOut;
    }
    EXPECT_EQ(noc + in + out, r.gt_occlusion.size()) << r.spec.name;
  }
}

TEST(Suite, MultiObjectSceneHasAllThreeLabels) {
  const auto& r = suite_scene("multi_object");
  std::set<Occlusion> seen;
  for (std::size_t i = 0; i < r.gt_occlusion.size(); ++i) seen.insert(r.gt_occlusion[i]);
  EXPECT_EQ(seen.size(), 3u);
}

TEST(Suite, StaticSceneIsAllNocWithZeroFlow) {
  const auto& r = suite_scene("static_square");
  for (std::size_t i = 0; i < r.gt_flow.size(); ++i) {
    EXPECT_EQ(r.gt_occlusion[i], Occlusion::kNoc);
    EXPECT_EQ(r.gt_flow[i], (Vec2{0.0f, 0.0f}));
  }
  EXPECT_EQ(r.frame0, r.frame1);
}

// Labels for integer-translation scenes straight from the definition:
// the landing pixel's topmost frame-1 object must be the pixel's own.
OcclusionMap translation_oracle(const SceneSpec& spec) {
  const GridDims d = spec.dims;
  auto top_object = [&](double x, double y, bool frame1) {
    int best = 0;
    int best_z = std::numeric_limits<int>::min();
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      const auto& o = spec.objects[k];
      const Point2d p = frame1 ? Point2d{x - o.motion.translation.x, y - o.motion.translation.y} : Point2d{x, y};
      if (point_in_polygon(o.polygon, p) && o.z > best_z) {
        best = static_cast<int>(k) + 1;
        best_z = o.z;
      }
    }
    return best;
  };
  OcclusionMap out(d, OcclusionVariant::kGroundTruth);
  for (int y = 0; y < d.h; ++y) {
    for (int x = 0; x < d.w; ++x) {
      const int o = top_object(x, y, false);
      const Point2d t = o == 0 ? Point2d{} : spec.objects[o - 1].motion.translation;
      const int qx = x + static_cast<int>(t.x), qy = y + static_cast<int>(t.y);
      if (!d.contains(qy, qx)) {
        out.set(y, x, Occlusion::kOccOut);
      } else if (top_object(qx, qy, true) != o) {
        out.set(y, x, Occlusion::kOccIn);
      }
    }
  }
  return out;
}

TEST(Suite, TranslationLabelsMatchIndependentOracle) {
  for (const char* name : {"static_square", "translate_square", "occ_out_translate", "occ_in_cover"}) {
    const auto& r = suite_scene(name);
    EXPECT_EQ(r.gt_occlusion, translation_oracle(r.spec)) << name;
  }
}

TEST(Suite, CoveredSquarePixelsAreOccIn) {
  // B covers columns 26..31, rows 22..37 of A in frame 1.
  const auto& r = suite_scene("occ_in_cover");
  for (int y = 16; y <= 39; ++y) {
    for (int x = 12; x <= 31; ++x) {
      const bool covered = x >= 26 && y >= 22 && y <= 37;
      EXPECT_EQ(r.gt_occlusion(y, x), covered ? Occlusion::kOccIn : Occlusion::kNoc) << x << "," << y;
    }
  }
}

TEST(Suite, OccOutIsExactlyTheLeavingPart) {
  const auto& r = suite_scene("occ_out_translate");
  for (int y = 20; y <= 31; ++y) {
    for (int x = 46; x <= 57; ++x) {
      EXPECT_EQ(r.gt_occlusion(y, x) == Occlusion::kOccOut, x + 10 >= 64);
    }
  }
}

TEST(Suite, GroundTruthFlowIsTheObjectMotion) {
  for (const auto& r : suite_renders()) {
    for (int y = 0; y < 64; y += 3) {
      for (int x = 0; x < 64; x += 3) {
        const int o = r.object_id0(y, x);
        const SceneMotion& m = r.motions[o];
        const Point2d q = m.apply({double(x), double(y)});
        EXPECT_NEAR(r.gt_flow(y, x).x, q.x - x, 1e-5);
        EXPECT_NEAR(r.gt_flow(y, x).y, q.y - y, 1e-5);
      }
    }
  }
}

TEST(Suite, SameSeedIsBitIdenticalAndSeedChangesTexture) {
  const auto a = render(standard_suite(11)[4]);
  const auto b = render(standard_suite(11)[4]);
  const auto c = render(standard_suite(12)[4]);
  EXPECT_EQ(a.frame0, b.frame0);
  EXPECT_EQ(a.frame1, b.frame1);
  EXPECT_EQ(a.gt_flow, b.gt_flow);
  EXPECT_EQ(a.gt_occlusion, b.gt_occlusion);
  EXPECT_NE(a.frame0, c.frame0);
  EXPECT_EQ(a.gt_occlusion, c.gt_occlusion);
}

TEST(Motion, InverseUndoesApply) {
  const SceneMotion m{0.3, {10.0, -4.0}, {2.5, 1.0}};
  const Point2d p{7.25, 3.5};
  const Point2d q = m.apply_inverse(m.apply(p));
  EXPECT_NEAR(q.x, p.x, 1e-12);
  EXPECT_NEAR(q.y, p.y, 1e-12);
}

TEST(PointId, RoundTrips) {
  for (const ScenePoint p : {ScenePoint{0, false, -5, 7}, ScenePoint{3, true, 63, 0}, ScenePoint{254, false, 1000, -1000}}) {
    const ScenePoint q = point_id::decode(point_id::encode(p));
    EXPECT_EQ(q.object, p.object);
    EXPECT_EQ(q.hole, p.hole);
    EXPECT_EQ(q.x, p.x);
    EXPECT_EQ(q.y, p.y);
  }
}

TEST(Validate, RejectsBadGeometry) {
  SceneSpec s;
  s.dims = {16, 16};
  SceneObject o;
  o.polygon = {{0, 0}, {4, 0}};
  s.objects = {o};
  EXPECT_THROW(validate(s), DataError);
  s.objects[0].polygon = {{0, 0}, {4, 4}, {4, 0}, {0, 4}};  // bow tie
  EXPECT_THROW(validate(s), DataError);
  s.objects[0].polygon = {{0, 0}, {4, 0}, {4, 4}};
  EXPECT_NO_THROW(validate(s));
  s.objects.push_back(s.objects[0]);
  EXPECT_THROW(validate(s), DataError);  // duplicate z
  s.objects.pop_back();
  s.objects[0].motion.theta = 4.0;
  EXPECT_THROW(validate(s), DataError);
  s.objects[0].motion.theta = 0.0;
  s.dims = {0, 16};
  EXPECT_THROW(render(s), DataError);
}

TEST(Polygon, AreaAndContainment) {
  const std::vector<Point2d> sq = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  EXPECT_DOUBLE_EQ(std::abs(signed_area(sq)), 4.0);
  EXPECT_TRUE(point_in_polygon(sq, {1, 1}));
  EXPECT_FALSE(point_in_polygon(sq, {3, 1}));
  EXPECT_TRUE(polygon_is_simple(sq));
}

TEST(SceneJson, RoundTripsEverySuiteScene) {
  for (const auto& s : standard_suite(123456789012345ULL)) {
    const SceneSpec back = scene_from_json(nlohmann::json::parse(to_json(s).dump()));
    EXPECT_EQ(back.name, s.name);
    EXPECT_EQ(back.seed, s.seed);
    EXPECT_EQ(render(back).frame1, render(s).frame1);
  }
}

TEST(SceneJson, MalformedDocumentsAreDataErrors) {
  EXPECT_THROW(scene_from_json(nlohmann::json::parse(R"({"width": 8})")), DataError);
  EXPECT_THROW(scene_from_json(nlohmann::json::parse(R"({"height": 8, "width": 8, "seed": "x"})")), DataError);
  EXPECT_THROW(scene_from_json(nlohmann::json::parse(
                   R"({"height": 8, "width": 8, "objects": [{"polygon": [[0,0],[1,1]], "z": 1}]})")),
               DataError);
}

}  // namespace
}  // namespace loopflow
