#include <gtest/gtest.h>

#include "depthprep/pipeline.hpp"
#include "depthprep/synth.hpp"

using namespace depthprep;

namespace {

PreparedSample prepared(std::uint64_t seed, PipelineConfig cfg = {}) {
  const Sample raw = synth::generate_scene(synth::randomized_config(synth::SceneConfig{}, seed));
  DatasetMaxima mx;
  mx.include(raw);
  cfg.fill.background_value_depth = mx.depth;
  cfg.fill.background_value_intensity = mx.intensity;
  return prepare_sample(raw, cfg);
}

}  // namespace

TEST(Prepare, PopulatesEveryField) {
  const Sample raw = synth::generate_scene(synth::randomized_config(synth::SceneConfig{}, 3));
  const PreparedSample p = prepared(3);
  const Sample& s = p.sample;
  ASSERT_TRUE(s.lr_depth.has_value());
  ASSERT_TRUE(s.object_map.has_value());
  EXPECT_EQ(s.lr_depth->width(), 80u);
  EXPECT_EQ(s.lr_depth->height(), 60u);
  EXPECT_EQ(s.scale, 4u);
  EXPECT_NO_THROW(validate(s));
  EXPECT_GT(count_ones(*s.object_map), 0u);
  for (std::size_t i = 0; i < s.hr_depth.size(); ++i) {
    EXPECT_TRUE(is_defined(p.filled_hr[i]));
    EXPECT_TRUE(is_defined((*s.lr_depth)[i % s.lr_depth->size()]));
    if (raw.definition[i]) {
      EXPECT_EQ(p.filled_hr[i], raw.hr_depth[i]);
      EXPECT_EQ(s.hr_depth[i], raw.hr_depth[i]);
      EXPECT_EQ(s.intensity[i], raw.intensity[i]);
    } else {
      EXPECT_FALSE(is_defined(s.hr_depth[i]));
    }
  }
}

TEST(Prepare, IsIdempotent) {
  PipelineConfig cfg;
  cfg.fill.background_value_depth = 1200.0f;
  cfg.fill.background_value_intensity = 0.9f;
  const Sample raw = synth::generate_scene(synth::randomized_config(synth::SceneConfig{}, 11));
  const PreparedSample once = prepare_sample(raw, cfg);
  const PreparedSample twice = prepare_sample(once.sample, cfg);
  EXPECT_EQ(once.sample.hr_depth, twice.sample.hr_depth);
  EXPECT_EQ(once.sample.intensity, twice.sample.intensity);
  EXPECT_EQ(*once.sample.lr_depth, *twice.sample.lr_depth);
  EXPECT_EQ(*once.sample.object_map, *twice.sample.object_map);
  EXPECT_EQ(once.filled_hr, twice.filled_hr);
}

TEST(Prepare, ScaleThreeDividesDimensions) {
  synth::SceneConfig sc;
  sc.width = 99;
  sc.height = 51;
  sc.object_size = {40, 40, 20};
  PipelineConfig cfg;
  cfg.scale = 3;
  const PreparedSample p = prepare_sample(synth::generate_scene(sc), cfg);
  EXPECT_EQ(p.sample.lr_depth->width(), 33u);
  EXPECT_EQ(p.sample.lr_depth->height(), 17u);
  cfg.scale = 4;
  EXPECT_THROW(prepare_sample(synth::generate_scene(sc), cfg), ValidationError);
}

TEST(Evaluate, PerfectPredictionScoresZero) {
  const PreparedSample p = prepared(5);
  const EvalReport rep = evaluate_prediction(p.filled_hr, p.sample, {}, true);
  EXPECT_EQ(rep.rmse, 0.0);
  EXPECT_EQ(rep.object_rmse, 0.0);
  EXPECT_EQ(rep.object_loss, 0.0);
  EXPECT_EQ(rep.distances.max, 0.0);
  ASSERT_TRUE(rep.colored.colors.has_value());
  for (const auto& c : *rep.colored.colors) EXPECT_EQ(c, (geom::Rgb{0.0f, 0.0f, 1.0f}));
  const auto j = rep.to_json();
  EXPECT_EQ(j.at("rmse").get<double>(), 0.0);
  EXPECT_TRUE(j.contains("hausdorff"));
}

TEST(Evaluate, NearestNeighbourBaselineHasObjectError) {
  const PreparedSample p = prepared(8);
  const DepthMap pred = upsample::upsample_nn(*p.sample.lr_depth, p.sample.scale);
  const EvalReport rep = evaluate_prediction(pred, p.sample, {}, true);
  EXPECT_TRUE(std::isfinite(rep.rmse));
  EXPECT_GT(rep.object_rmse, 0.0);
  EXPECT_GT(rep.distances.max, 0.0);
  EXPECT_LT(static_cast<double>(rep.pcl_removed) / rep.pcl_input_points, 0.05);
}

TEST(Evaluate, RejectsMismatchedPrediction) {
  const PreparedSample p = prepared(2);
  EXPECT_THROW(evaluate_prediction(DepthMap(10, 10, 500.0f), p.sample, {}, false), DimensionMismatch);
  Sample bare = p.sample;
  bare.object_map.reset();
  EXPECT_THROW(evaluate_prediction(p.filled_hr, bare, {}, false), ValidationError);
}

TEST(Config, JsonOverridesFields) {
  PipelineConfig cfg;
  apply_json(cfg, nlohmann::json::parse(R"({"scale": 2, "tau": 1.5, "connectivity": 8, "k": 8, "epsilon": 4})"));
  EXPECT_EQ(cfg.scale, 2u);
  EXPECT_EQ(cfg.tau, 1.5f);
  EXPECT_EQ(cfg.fill.connectivity, prep::Connectivity::Eight);
  EXPECT_EQ(cfg.outliers.k_neighbors, 8u);
  EXPECT_EQ(cfg.plane.object_margin_epsilon, 4.0);
  EXPECT_EQ(cfg.plane.grid_w, 20u);
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"({"connectivity": 6})")), ValidationError);
  EXPECT_THROW(apply_json(cfg, nlohmann::json::parse(R"({"scale": "four"})")), ValidationError);
}
