#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "depthprep/upsample.hpp"

using namespace depthprep;
using upsample::upsample_bicubic;
using upsample::upsample_nn;

TEST(UpsampleNn, ScaleOneIsIdentity) {
  DepthMap d(3, 2, 410.0f);
  d(1, 2) = kUndefined;
  EXPECT_EQ(upsample_nn(d, 1), d);
}

TEST(UpsampleNn, SinglePixelExpands) {
  const DepthMap out = upsample_nn(DepthMap(1, 1, 400.0f), 3);
  EXPECT_EQ(out, DepthMap(3, 3, 400.0f));
}

TEST(UpsampleNn, QuadrantsReplicated) {
  const DepthMap d(2, 2, std::vector<float>{1, 2, 3, kUndefined});
  const DepthMap out = upsample_nn(d, 2);
  const DepthMap expected(4, 4, std::vector<float>{1, 1, 2, 2,  //
                                                   1, 1, 2, 2,  //
                                                   3, 3, kUndefined, kUndefined,
                                                   3, 3, kUndefined, kUndefined});
  EXPECT_EQ(out, expected);
}

TEST(UpsampleNn, IntroducesNoNewValues) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(100.0f, 900.0f);
  DepthMap d(5, 4);
  std::set<float> values;
  for (auto& v : d.data()) {
    v = u(rng);
    values.insert(v);
  }
  const DepthMap out = upsample_nn(d, 3);
  for (auto v : out.data()) EXPECT_TRUE(values.contains(v));
}

TEST(UpsampleNn, RejectsZeroFactor) { EXPECT_THROW(upsample_nn(DepthMap(2, 2, 1.0f), 0), ValidationError); }

TEST(UpsampleBicubic, ConstantStaysConstant) {
  const DepthMap out = upsample_bicubic(DepthMap(5, 4, 612.5f), 4);
  for (auto v : out.data()) EXPECT_FLOAT_EQ(v, 612.5f);
}

TEST(UpsampleBicubic, LinearRampPreservedAwayFromClampedEdges) {
  const std::size_t w = 8, h = 6, s = 4;
  DepthMap d(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) d(r, c) = 300.0f + 2.0f * c + 3.0f * r;
  }
  const DepthMap out = upsample_bicubic(d, s);
  std::size_t checked = 0;
  for (std::size_t r = 0; r < out.height(); ++r) {
    const double sy = (r + 0.5) / s - 0.5;
    if (std::floor(sy) < 1 || std::floor(sy) + 2 > h - 1) continue;
    for (std::size_t c = 0; c < out.width(); ++c) {
      const double sx = (c + 0.5) / s - 0.5;
      if (std::floor(sx) < 1 || std::floor(sx) + 2 > w - 1) continue;
      const double expected = 300.0 + 2.0 * sx + 3.0 * sy;
      EXPECT_LE(std::abs(out(r, c) - expected), 1e-6 * expected);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(UpsampleBicubic, StepEdgeOvershoots) {
  // columns 0-2 at 100, 3-5 at 200. Output column 9 samples source x = 1.875:
  // taps 0..3 with weights summing to 1 and a -49/1024 weight on the 200 tap.
  DepthMap d(6, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 6; ++c) d(r, c) = c < 3 ? 100.0f : 200.0f;
  }
  const DepthMap out = upsample_bicubic(d, 4);
  EXPECT_NEAR(out(5, 9), 100.0 - 100.0 * 49.0 / 1024.0, 1e-4);
  EXPECT_LT(out(5, 9), 100.0f);
  float hi = 0.0f;
  for (auto v : out.data()) hi = std::max(hi, v);
  EXPECT_GT(hi, 200.0f);
}

TEST(UpsampleBicubic, RejectsUndefinedInput) {
  DepthMap d(3, 3, 500.0f);
  d(1, 1) = kUndefined;
  EXPECT_THROW(upsample_bicubic(d, 2), ValidationError);
}

TEST(Remask, Cases) {
  DepthMap d(4, 4);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = 300.0f + static_cast<float>(i);
  EXPECT_EQ(upsample::remask(d, DefinitionMap(4, 4, 1)), d);
  EXPECT_EQ(upsample::remask(d, DefinitionMap(4, 4, 0)), DepthMap(4, 4, kUndefined));
  DefinitionMap checker(4, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) checker(r, c) = (r + c) % 2;
  }
  const DepthMap out = upsample::remask(d, checker);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (checker[i]) {
      EXPECT_EQ(out[i], d[i]);
    } else {
      EXPECT_FALSE(is_defined(out[i]));
    }
  }
  EXPECT_THROW(upsample::remask(d, DefinitionMap(3, 4, 1)), DimensionMismatch);
}
