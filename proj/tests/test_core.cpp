#include <gtest/gtest.h>

#include <random>

#include "loopflow/core.hpp"
#include "support.hpp"

namespace loopflow {
namespace {

TEST(GridDims, IndexIsRowMajor) {
  const GridDims d{3, 5};
  EXPECT_EQ(d.size(), 15u);
  EXPECT_EQ(d.index(2, 4), 14u);
  EXPECT_TRUE(d.contains(0, 4));
  EXPECT_FALSE(d.contains(3, 0));
  EXPECT_FALSE(d.contains(0, -1));
}

TEST(GridDims, InvalidDimsRejected) {
  EXPECT_THROW(ScalarField(GridDims{0, 4}), DataError);
  EXPECT_THROW(FeatureMap(GridDims{2, 2}, 0), DataError);
  EXPECT_THROW(require_same_dims(GridDims{2, 3}, GridDims{3, 2}, "x"), DataError);
}

TEST(InitCoord, HoldsColumnThenRow) {
  const CoordField c = init_coord(GridDims{4, 6});
  EXPECT_EQ(c(3, 5), (Vec2{5.0f, 3.0f}));
  EXPECT_EQ(c(0, 0), (Vec2{0.0f, 0.0f}));
}

TEST(TargetCoords, AddsFlow) {
  FlowField f(GridDims{2, 2}, Vec2{1.5f, -2.0f});
  const CoordField t = target_coords(f, init_coord(f.dims()));
  EXPECT_EQ(t(1, 1), (Vec2{2.5f, -1.0f}));
}

// Straight four-tap formula, written out independently.
float reference_bilinear(const ScalarField& img, float x, float y, bool zero_pad) {
  auto get = [&](int r, int c) -> float {
    if (!img.dims().contains(r, c)) return 0.0f;
    return img(r, c);
  };
  if (!zero_pad) {
    x = std::clamp(x, 0.0f, static_cast<float>(img.width() - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(img.height() - 1));
  }
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const float ax = x - static_cast<float>(x0), ay = y - static_cast<float>(y0);
  return (1 - ax) * (1 - ay) * get(y0, x0) + ax * (1 - ay) * get(y0, x0 + 1) + (1 - ax) * ay * get(y0 + 1, x0) +
         ax * ay * get(y0 + 1, x0 + 1);
}

TEST(SampleBilinear, MatchesReferenceFormula) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> val(0.0f, 1.0f), pos(-2.0f, 9.0f);
  ScalarField img(GridDims{7, 8});
  for (auto& v : img) v = val(rng);
  CoordField at(GridDims{20, 20});
  for (auto& c : at) c = Vec2{pos(rng), pos(rng)};
  for (const Padding p : {Padding::kZero, Padding::kClamp}) {
    const ScalarField s = sample_bilinear(img, at, p);
    for (std::size_t i = 0; i < at.size(); ++i) {
      EXPECT_NEAR(s[i], reference_bilinear(img, at[i].x, at[i].y, p == Padding::kZero), 1e-5f);
    }
  }
}

TEST(SampleBilinear, IntegerCoordinatesAreExact) {
  std::mt19937_64 rng(2);
  const FlowField f = testing::random_flow(rng, GridDims{5, 6}, 10.0f);
  const FlowField s = sample_bilinear(f, init_coord(f.dims()), Padding::kZero);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_TRUE(testing::bit_equal(s[i], f[i]));
}

TEST(SampleBilinear, ZeroPaddingVanishesFarOutside) {
  const ScalarField img(GridDims{3, 3}, 1.0f);
  CoordField at(GridDims{1, 2});
  at[0] = Vec2{-5.0f, 1.0f};
  at[1] = Vec2{1.0f, 3.5f};
  const ScalarField s = sample_bilinear(img, at, Padding::kZero);
  EXPECT_EQ(s[0], 0.0f);
  EXPECT_EQ(s[1], 0.0f);
  const ScalarField c = sample_bilinear(img, at, Padding::kClamp);
  EXPECT_EQ(c[0], 1.0f);
  EXPECT_EQ(c[1], 1.0f);
}

TEST(SampleBilinear, NonFiniteCoordinateGivesZero) {
  const ScalarField img(GridDims{2, 2}, 3.0f);
  CoordField at(GridDims{1, 1}, Vec2{std::numeric_limits<float>::quiet_NaN(), 0.0f});
  EXPECT_EQ(sample_bilinear(img, at, Padding::kClamp)[0], 0.0f);
}

TEST(SampleDescriptor, InterpolatesEachChannel) {
  FeatureMap m(GridDims{1, 2}, 2);
  m.at(0)[0] = 1.0f;
  m.at(1)[1] = 1.0f;
  std::vector<float> out(2);
  sample_descriptor(m, Vec2{0.25f, 0.0f}, Padding::kZero, out);
  EXPECT_FLOAT_EQ(out[0], 0.75f);
  EXPECT_FLOAT_EQ(out[1], 0.25f);
}

TEST(FeatureMap, NormalizeProducesUnitDescriptors) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g;
  FeatureMap m(GridDims{4, 4}, 9);
  for (std::size_t p = 0; p < 16; ++p) {
    for (float& v : m.at(p)) v = g(rng);
  }
  EXPECT_FALSE(m.normalized());
  m.normalize();
  EXPECT_TRUE(m.normalized());
  for (std::size_t p = 0; p < 16; ++p) EXPECT_NEAR(dot(m.at(p), m.at(p)), 1.0f, 1e-5f);
}

TEST(FeatureMap, ZeroDescriptorCannotBeNormalized) {
  FeatureMap m(GridDims{1, 2}, 3);
  m.at(0)[0] = 1.0f;
  EXPECT_THROW(m.normalize(), DataError);
  EXPECT_THROW(m.mark_normalized(), InvariantError);
}

TEST(OcclusionMap, VariantsAdmitTheirLabels) {
  OcclusionMap est(GridDims{1, 3}, OcclusionVariant::kEstimate);
  est.set(0, Occlusion::kOcc);
  EXPECT_THROW(est.set(1, Occlusion::kOccIn), InvariantError);
  OcclusionMap gt(GridDims{1, 3}, OcclusionVariant::kGroundTruth);
  gt.set(0, Occlusion::kOccIn);
  gt.set(1, Occlusion::kOccOut);
  EXPECT_THROW(gt.set(2, Occlusion::kOcc), InvariantError);
  const OcclusionMap bin = gt.binarized();
  EXPECT_EQ(bin[0], Occlusion::kOcc);
  EXPECT_EQ(bin[1], Occlusion::kOcc);
  EXPECT_EQ(bin[2], Occlusion::kNoc);
}

TEST(Errors, ShareABaseClass) {
  try {
    throw InvariantError("x");
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "x");
  }
}

}  // namespace
}  // namespace loopflow
