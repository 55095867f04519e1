#include <gtest/gtest.h>

#include <cstring>
#include <map>
#include <random>

#include "depthprep/prep.hpp"
#include "depthprep/upsample.hpp"
#include "oracles.hpp"

using namespace depthprep;
using prep::Connectivity;

namespace {

DepthMap from_rows(std::size_t w, std::size_t h, std::initializer_list<float> values) {
  return DepthMap(w, h, std::vector<float>(values));
}

constexpr float U = kUndefined;

}  // namespace

// ---- downsample ----------------------------------------------------------------

TEST(Downsample, ConstantBlock) {
  const DepthMap d = from_rows(2, 2, {300, 300, 300, 300});
  EXPECT_EQ(prep::downsample(d, 2, 5.0f)(0, 0), 300.0f);
}

TEST(Downsample, EdgeBlockKeepsForeground) {
  // range 100 > tau, so the minimum survives
  const DepthMap d = from_rows(2, 2, {300, 300, 300, 400});
  EXPECT_EQ(prep::downsample(d, 2, 5.0f)(0, 0), 300.0f);
  const DepthMap e = from_rows(2, 2, {400, 400, 400, 300});
  EXPECT_EQ(prep::downsample(e, 2, 5.0f)(0, 0), 300.0f);
}

TEST(Downsample, SmoothBlockKeepsCenterPixel) {
  // range 2 <= tau: the center of a 3x3 block is pixel (1,1)
  const DepthMap d = from_rows(3, 3, {500, 501, 502, 500, 501.5f, 502, 500, 501, 502});
  EXPECT_EQ(prep::downsample(d, 3, 5.0f)(0, 0), 501.5f);
  // even block: four pixels tie for the center, the first in row-major order wins
  const DepthMap e = from_rows(2, 2, {600, 601, 602, 603});
  EXPECT_EQ(prep::downsample(e, 2, 5.0f)(0, 0), 600.0f);
  // undefined center: nearest defined pixel instead
  const DepthMap f = from_rows(3, 3, {500, 501, 502, 503, U, 504, 505, 506, 507});
  EXPECT_EQ(prep::downsample(f, 3, 10.0f)(0, 0), 501.0f);
}

TEST(Downsample, EmptyBlockStaysUndefined) {
  const DepthMap d = from_rows(4, 2, {U, U, 700, U, U, U, U, U});
  const DepthMap out = prep::downsample(d, 2, 5.0f);
  EXPECT_FALSE(is_defined(out(0, 0)));
  EXPECT_EQ(out(0, 1), 700.0f);
}

TEST(Downsample, RejectsBadFactor) {
  const DepthMap d(6, 4, 500.0f);
  EXPECT_THROW(prep::downsample(d, 0, 5.0f), ValidationError);
  EXPECT_THROW(prep::downsample(d, 4, 5.0f), ValidationError);
  EXPECT_NO_THROW(prep::downsample(d, 2, 5.0f));
}

TEST(Downsample, ScaleOneIsIdentity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(200.0f, 900.0f);
  for (float tau : {0.0f, 5.0f, 1000.0f}) {
    DepthMap d(7, 5);
    for (auto& v : d.data()) v = rng() % 4 ? u(rng) : kUndefined;
    EXPECT_EQ(prep::downsample(d, 1, tau), d);
  }
}

TEST(Downsample, OutputValuesComeFromTheirBlock) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<float> u(200.0f, 900.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t s = 1 + rng() % 4;
    const std::size_t w = s * (1 + rng() % 5), h = s * (1 + rng() % 5);
    DepthMap d(w, h);
    for (auto& v : d.data()) v = rng() % 3 ? u(rng) : kUndefined;
    const float tau = static_cast<float>(rng() % 400);
    const DepthMap out = prep::downsample(d, s, tau);
    for (std::size_t br = 0; br < out.height(); ++br) {
      for (std::size_t bc = 0; bc < out.width(); ++bc) {
        bool any = false, member = false;
        for (std::size_t r = 0; r < s; ++r) {
          for (std::size_t c = 0; c < s; ++c) {
            const float v = d(br * s + r, bc * s + c);
            if (!is_defined(v)) continue;
            any = true;
            member = member || v == out(br, bc);
          }
        }
        EXPECT_EQ(any, is_defined(out(br, bc)));
        if (any) {
          EXPECT_TRUE(member);
        }
      }
    }
  }
}

TEST(Downsample, BlockConstantRoundTripsThroughNearestUpsample) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<float> u(200.0f, 900.0f);
  for (std::size_t s : {2u, 3u, 4u}) {
    DepthMap lr(6, 5);
    for (auto& v : lr.data()) v = rng() % 5 ? u(rng) : kUndefined;
    const DepthMap hr = upsample::upsample_nn(lr, s);
    EXPECT_EQ(upsample::upsample_nn(prep::downsample(hr, s, 5.0f), s), hr);
  }
}

// ---- classify_holes ----------------------------------------------------------------

TEST(ClassifyHoles, NoHoles) {
  const auto l = prep::classify_holes(DefinitionMap(5, 5, 1));
  EXPECT_EQ(l.hole_count, 0u);
  EXPECT_TRUE(l.background_ids.empty());
}

TEST(ClassifyHoles, InteriorHole) {
  DefinitionMap m(5, 5, 1);
  m(2, 2) = 0;
  const auto l = prep::classify_holes(m);
  EXPECT_EQ(l.hole_count, 1u);
  EXPECT_TRUE(l.background_ids.empty());
  EXPECT_EQ(l.labels(2, 2), 1u);
}

TEST(ClassifyHoles, BorderLShapeAndInteriorBlock) {
  DefinitionMap m(6, 6, 1);
  // L touching the top edge
  m(0, 1) = m(1, 1) = m(2, 1) = m(2, 2) = 0;
  // 2x2 interior block
  m(3, 3) = m(3, 4) = m(4, 3) = m(4, 4) = 0;
  const auto l = prep::classify_holes(m);
  EXPECT_EQ(l.hole_count, 2u);
  ASSERT_EQ(l.background_ids.size(), 1u);
  EXPECT_TRUE(l.is_background(l.labels(0, 1)));
  EXPECT_FALSE(l.is_background(l.labels(3, 3)));
  EXPECT_EQ(l.labels(2, 2), l.labels(0, 1));

  // same layout checked against the relaxation oracle
  const auto lab = oracle::relax_components(m, 4);
  const auto border = oracle::border_components(m, lab);
  EXPECT_EQ(border.size(), 1u);
  EXPECT_TRUE(border.contains(lab[1]));
}

TEST(ClassifyHoles, DiagonalJoinsOnlyUnderEightConnectivity) {
  DefinitionMap m(5, 5, 1);
  m(1, 1) = 0;
  m(2, 2) = 0;
  EXPECT_EQ(prep::classify_holes(m, Connectivity::Four).hole_count, 2u);
  EXPECT_EQ(prep::classify_holes(m, Connectivity::Eight).hole_count, 1u);
}

TEST(ClassifyHoles, MatchesRelaxationOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const DefinitionMap m = oracle::random_mask(rng);
    for (int conn : {4, 8}) {
      const auto l = prep::classify_holes(m, conn == 4 ? Connectivity::Four : Connectivity::Eight);
      const auto lab = oracle::relax_components(m, conn);
      const auto border = oracle::border_components(m, lab);
      std::map<long, std::uint32_t> fwd;
      std::map<std::uint32_t, long> back;
      for (std::size_t i = 0; i < m.size(); ++i) {
        ASSERT_EQ(lab[i] < 0, l.labels[i] == 0);
        if (lab[i] < 0) continue;
        auto [it, fresh] = fwd.emplace(lab[i], l.labels[i]);
        ASSERT_EQ(it->second, l.labels[i]);
        auto [jt, fresh2] = back.emplace(l.labels[i], lab[i]);
        ASSERT_EQ(jt->second, lab[i]);
        ASSERT_EQ(border.contains(lab[i]), l.is_background(l.labels[i]));
      }
      ASSERT_EQ(fwd.size(), l.hole_count);
    }
  }
}

// ---- fill_depth ----------------------------------------------------------------------

TEST(FillDepth, NoHolesIsIdentity) {
  DepthMap d(4, 3, 512.0f);
  d(1, 2) = 600.0f;
  const auto l = prep::classify_holes(definition_map(d));
  EXPECT_EQ(prep::fill_depth(d, l, {}), d);
}

TEST(FillDepth, InteriorRunTakesLargerBorder) {
  // middle row is [100, U, U, 200, 300]; rows above/below are defined
  DepthMap d = from_rows(5, 3, {100, 100, 100, 100, 100,  //
                                100, U, U, 200, 300,      //
                                100, 100, 100, 100, 100});
  const auto l = prep::classify_holes(definition_map(d));
  ASSERT_TRUE(l.background_ids.empty());
  const DepthMap f = prep::fill_depth(d, l, {});
  EXPECT_EQ(f(1, 1), 200.0f);
  EXPECT_EQ(f(1, 2), 200.0f);
}

TEST(FillDepth, BorderHoleTakesBackgroundConstant) {
  DepthMap d(5, 5, 400.0f);
  d(0, 2) = d(1, 2) = kUndefined;
  const auto l = prep::classify_holes(definition_map(d));
  prep::FillConfig cfg;
  cfg.background_value_depth = 1500.0f;
  const DepthMap f = prep::fill_depth(d, l, cfg);
  EXPECT_EQ(f(0, 2), 1500.0f);
  EXPECT_EQ(f(1, 2), 1500.0f);
}

TEST(FillDepth, ConcaveHoleFilledPerRun) {
  // one U-shaped hole; rows 1 and 2 cut it into two runs with different borders
  const DepthMap d = from_rows(7, 5, {900, 900, 900, 900, 900, 900, 900,  //
                                      900, U, 300, 310, 320, U, 900,      //
                                      900, U, 50, 60, 70, U, 800,         //
                                      400, U, U, U, U, U, 450,            //
                                      900, 900, 900, 900, 900, 900, 900});
  const auto l = prep::classify_holes(definition_map(d));
  ASSERT_EQ(l.hole_count, 1u);
  ASSERT_TRUE(l.background_ids.empty());
  const DepthMap f = prep::fill_depth(d, l, {});
  EXPECT_EQ(f(1, 1), 900.0f);
  EXPECT_EQ(f(1, 5), 900.0f);
  EXPECT_EQ(f(2, 1), 900.0f);
  EXPECT_EQ(f(2, 5), 800.0f);
  for (std::size_t c = 1; c <= 5; ++c) EXPECT_EQ(f(3, c), 450.0f);
}

TEST(FillDepth, PreservesDefinedAndIsIdempotent) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(300.0f, 800.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const DefinitionMap m = oracle::random_mask(rng);
    DepthMap d(m.width(), m.height());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = m[i] ? u(rng) : kUndefined;
    const auto l = prep::classify_holes(m);
    const DepthMap f = prep::fill_depth(d, l, {});
    for (std::size_t i = 0; i < d.size(); ++i) {
      ASSERT_TRUE(is_defined(f[i]));
      if (m[i]) {
        ASSERT_EQ(std::memcmp(&d[i], &f[i], 4), 0);
      }
    }
    const auto l2 = prep::classify_holes(definition_map(f));
    EXPECT_EQ(prep::fill_depth(f, l2, {}), f);
  }
}

TEST(FillDepth, RejectsMismatchedLabeling) {
  const DepthMap d(4, 4, 500.0f);
  const auto l = prep::classify_holes(DefinitionMap(5, 4, 1));
  EXPECT_THROW(prep::fill_depth(d, l, {}), DimensionMismatch);
}

TEST(FillDepth, RemaskRestoresUndefined) {
  DepthMap d(5, 5, 450.0f);
  d(2, 2) = kUndefined;
  d(0, 0) = kUndefined;
  const DefinitionMap m = definition_map(d);
  const DepthMap f = prep::fill_depth(d, prep::classify_holes(m), {});
  EXPECT_EQ(upsample::remask(f, m), d);
}

// ---- augment_texture -------------------------------------------------------------------

TEST(AugmentTexture, AllDefinedIsIdentity) {
  IntensityMap t(4, 4, 0.25f);
  t(1, 1) = 0.75f;
  const DefinitionMap m(4, 4, 1);
  EXPECT_EQ(prep::augment_texture(t, m, prep::classify_holes(m), {}), t);
}

TEST(AugmentTexture, InteriorRunTakesLargerBorder) {
  IntensityMap t(4, 3, 0.1f);
  t(1, 0) = 0.2f;
  t(1, 1) = 0.9f;  // undefined below; value must not leak
  t(1, 2) = 0.9f;
  t(1, 3) = 0.6f;
  DefinitionMap m(4, 3, 1);
  m(1, 1) = m(1, 2) = 0;
  const IntensityMap out = prep::augment_texture(t, m, prep::classify_holes(m), {});
  EXPECT_EQ(out(1, 1), 0.6f);
  EXPECT_EQ(out(1, 2), 0.6f);
  EXPECT_EQ(out(1, 0), 0.2f);
}

TEST(AugmentTexture, BorderHoleTakesBackgroundIntensity) {
  IntensityMap t(3, 3, 0.3f);
  DefinitionMap m(3, 3, 1);
  m(0, 0) = 0;
  prep::FillConfig cfg;
  cfg.background_value_intensity = 1.0f;
  EXPECT_EQ(prep::augment_texture(t, m, prep::classify_holes(m), cfg)(0, 0), 1.0f);
}

TEST(AugmentTexture, DimensionMismatch) {
  const DefinitionMap m(3, 3, 1);
  EXPECT_THROW(prep::augment_texture(IntensityMap(4, 3, 0.5f), m, prep::classify_holes(m), {}),
               DimensionMismatch);
}

TEST(FillConfig, Validation) {
  prep::FillConfig cfg;
  cfg.background_value_depth = 0.0f;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.background_value_depth = 10.0f;
  cfg.background_value_intensity = 1.5f;
  EXPECT_THROW(cfg.validate(), ValidationError);
}
