#include <gtest/gtest.h>

#include <random>

#include "depthprep/core.hpp"

using namespace depthprep;

TEST(DefinitionMap, FullyDefinedIsAllOnes) {
  const DepthMap d(4, 4, 500.0f);
  const DefinitionMap m = definition_map(d);
  EXPECT_EQ(m.width(), 4u);
  EXPECT_EQ(m.height(), 4u);
  EXPECT_EQ(count_ones(m), 16u);
}

TEST(DefinitionMap, FullyUndefinedIsAllZeros) {
  const DepthMap d(5, 3, kUndefined);
  EXPECT_EQ(count_ones(definition_map(d)), 0u);
}

TEST(DefinitionMap, SingleHoleAtCenter) {
  DepthMap d(3, 3, 420.0f);
  d(1, 1) = kUndefined;
  const DefinitionMap m = definition_map(d);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(m(r, c), (r == 1 && c == 1) ? 0 : 1);
  }
}

TEST(DefinitionMap, OnesMatchDefinedCount) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = 1 + rng() % 20, h = 1 + rng() % 20;
    DepthMap d(w, h);
    std::size_t defined = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (u(rng) < 0.3f) {
        d[i] = kUndefined;
      } else {
        d[i] = 100.0f + 900.0f * u(rng);
        ++defined;
      }
    }
    EXPECT_EQ(count_ones(definition_map(d)), defined);
  }
}

TEST(Raster, RejectsWrongDataLength) {
  EXPECT_THROW(DepthMap(3, 3, std::vector<float>(8, 1.0f)), DimensionMismatch);
  EXPECT_THROW(DefinitionMap(2, 2, std::vector<std::uint8_t>(5, 1)), DimensionMismatch);
  EXPECT_THROW(DepthMap(0, 3), DimensionMismatch);
  EXPECT_NO_THROW(DepthMap(3, 2, std::vector<float>(6, 1.0f)));
}

TEST(Raster, EqualityTreatsSentinelsAsEqual) {
  DepthMap a(2, 1, kUndefined);
  DepthMap b(2, 1, kUndefined);
  EXPECT_EQ(a, b);
  b(0, 1) = 3.0f;
  EXPECT_NE(a, b);
}

TEST(Validate, DepthRejectsNonPositive) {
  DepthMap d(2, 2, 300.0f);
  EXPECT_NO_THROW(validate(d));
  d(0, 0) = -1.0f;
  EXPECT_THROW(validate(d), ValidationError);
  d(0, 0) = 0.0f;
  EXPECT_THROW(validate(d), ValidationError);
}

TEST(Validate, SampleCrossFieldInvariants) {
  Sample s;
  s.hr_depth = DepthMap(8, 4, 500.0f);
  s.intensity = IntensityMap(8, 4, 0.5f);
  s.definition = DefinitionMap(8, 4, 1);
  s.intrinsics = {10.0, 10.0, 4.0, 2.0};
  s.scale = 2;
  EXPECT_NO_THROW(validate(s));

  Sample bad_scale = s;
  bad_scale.scale = 3;
  EXPECT_THROW(validate(bad_scale), ValidationError);

  Sample bad_lr = s;
  bad_lr.lr_depth = DepthMap(3, 2, 500.0f);
  EXPECT_THROW(validate(bad_lr), DimensionMismatch);

  Sample bad_obj = s;
  bad_obj.definition(0, 0) = 0;
  bad_obj.object_map = ObjectMap(8, 4, 1);
  EXPECT_THROW(validate(bad_obj), ValidationError);

  Sample bad_k = s;
  bad_k.intrinsics.cx = 8.0;
  EXPECT_THROW(validate(bad_k), ValidationError);

  Sample bad_i = s;
  bad_i.intensity = IntensityMap(4, 4, 0.5f);
  EXPECT_THROW(validate(bad_i), DimensionMismatch);
}
