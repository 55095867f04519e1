#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "depthprep/core.hpp"
#include "depthprep/eval.hpp"
#include "depthprep/geom.hpp"
#include "depthprep/prep.hpp"
#include "depthprep/scene.hpp"
#include "depthprep/upsample.hpp"

namespace depthprep {

struct PipelineConfig {
  prep::FillConfig fill;
  scene::PlaneSearchConfig plane;
  geom::OutlierParams outliers;
  eval::LossWeights weights;
  std::size_t scale = 4;
  float tau = prep::kDefaultTau;
  double color_threshold = geom::kDefaultColorThreshold;
  bool symmetric_distance = false;
};

/// Overrides any field present in `j`; absent keys keep their current value.
inline void apply_json(PipelineConfig& cfg, const nlohmann::json& j) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  try {
    get("scale", cfg.scale);
    get("tau", cfg.tau);
    get("background", cfg.fill.background_value_depth);
    get("background_intensity", cfg.fill.background_value_intensity);
    if (j.contains("connectivity")) {
      const int c = j.at("connectivity").get<int>();
      if (c != 4 && c != 8) throw ValidationError("connectivity must be 4 or 8");
      cfg.fill.connectivity = c == 4 ? prep::Connectivity::Four : prep::Connectivity::Eight;
    }
    get("grid_w", cfg.plane.grid_w);
    get("grid_h", cfg.plane.grid_h);
    get("near_mean_fraction", cfg.plane.near_mean_fraction);
    get("far_fraction", cfg.plane.far_fraction);
    get("epsilon", cfg.plane.object_margin_epsilon);
    get("k", cfg.outliers.k_neighbors);
    get("ratio", cfg.outliers.std_ratio);
    get("object_weight", cfg.weights.object_weight);
    get("background_weight", cfg.weights.background_weight);
    get("color_threshold", cfg.color_threshold);
    get("symmetric", cfg.symmetric_distance);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

/// Maximum defined depth and intensity over a set of samples; these are the
/// constants used for background holes.
struct DatasetMaxima {
  float depth = 0.0f;
  float intensity = 0.0f;

  void include(const Sample& s) {
    for (std::size_t i = 0; i < s.hr_depth.size(); ++i) {
      if (!s.definition[i]) continue;
      if (is_defined(s.hr_depth[i])) depth = std::max(depth, s.hr_depth[i]);
      intensity = std::max(intensity, s.intensity[i]);
    }
  }
};

struct PreparedSample {
  Sample sample;  // hr_depth stays raw; intensity is the augmented texture
  DepthMap filled_hr;
  scene::Plane plane;
};

/// Definition map, hole filling, texture augmentation, down-sampling and
/// object-map extraction for one sample. The stored definition map is
/// authoritative so repeated runs reproduce the same outputs.
inline PreparedSample prepare_sample(const Sample& in, const PipelineConfig& cfg) {
  validate(in);
  PreparedSample out;
  out.sample = in;
  Sample& s = out.sample;
  const DefinitionMap& definition = s.definition;
  const DepthMap raw = upsample::remask(s.hr_depth, definition);

  const prep::HoleLabeling labels = prep::classify_holes(definition, cfg.fill.connectivity);
  out.filled_hr = prep::fill_depth(raw, labels, cfg.fill);
  s.intensity = prep::augment_texture(in.intensity, definition, labels, cfg.fill);
  s.lr_depth = prep::downsample(out.filled_hr, cfg.scale, cfg.tau);
  s.scale = cfg.scale;

  const scene::ObjectExtraction ex = scene::extract_object(out.filled_hr, definition, s.intrinsics, cfg.plane);
  s.object_map = ex.object;
  out.plane = ex.plane;
  s.hr_depth = raw;
  validate(s);
  return out;
}

struct EvalReport {
  double rmse = 0.0;
  double object_rmse = 0.0;
  double object_loss = 0.0;
  bool has_object = false;

  // point-cloud stage
  bool has_pcl = false;
  std::size_t pcl_input_points = 0;
  std::size_t pcl_removed = 0;
  geom::DistanceStats distances;
  geom::PointCloud colored;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rmse"] = rmse;
    j["object_rmse"] = has_object ? nlohmann::json(object_rmse) : nlohmann::json(nullptr);
    j["object_loss"] = object_loss;
    if (has_pcl) {
      j["points"] = pcl_input_points;
      j["removed"] = pcl_removed;
      j["removed_fraction"] =
          pcl_input_points ? static_cast<double>(pcl_removed) / static_cast<double>(pcl_input_points) : 0.0;
      j["hausdorff"] = {{"min", distances.min}, {"max", distances.max}, {"mean", distances.mean}};
    }
    return j;
  }
};

/// Scores a full-resolution prediction against a prepared sample. The
/// prediction is remasked to the definition map first.
inline EvalReport evaluate_prediction(const DepthMap& prediction, const Sample& sample,
                                      const PipelineConfig& cfg, bool with_pcl) {
  require_same_shape(prediction, sample.hr_depth, "prediction vs ground truth");
  if (!sample.object_map) throw ValidationError("sample has no object map; run prepare first");
  const DepthMap pred = upsample::remask(prediction, sample.definition);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (sample.definition[i] && !(std::isfinite(pred[i]))) {
      throw ValidationError("prediction undefined at a defined pixel " + std::to_string(i));
    }
  }
  EvalReport rep;
  rep.rmse = eval::rmse(pred, sample.hr_depth, sample.definition);
  rep.object_loss = eval::object_loss(pred, sample.hr_depth, *sample.object_map, sample.definition, cfg.weights);
  if (count_ones(*sample.object_map) > 0) {
    rep.has_object = true;
    rep.object_rmse = eval::object_rmse(pred, sample.hr_depth, *sample.object_map, sample.definition);
  }
  if (with_pcl) {
    rep.has_pcl = true;
    const geom::PointCloud gt_cloud = geom::unproject(sample.hr_depth, sample.definition, sample.intrinsics);
    const geom::PointCloud pred_cloud = geom::unproject(pred, sample.definition, sample.intrinsics);
    rep.pcl_input_points = pred_cloud.size();
    const geom::OutlierResult cleaned = geom::remove_outliers(pred_cloud, cfg.outliers);
    rep.pcl_removed = cleaned.removed_count;
    rep.distances = cfg.symmetric_distance ? geom::nn_distances_symmetric(cleaned.cloud, gt_cloud)
                                           : geom::nn_distances(cleaned.cloud, gt_cloud);
    rep.colored = cleaned.cloud;
    // symmetric stats list candidate points first, so the first n entries color the cloud
    std::vector<geom::Rgb> colors;
    colors.reserve(rep.colored.size());
    for (std::size_t i = 0; i < rep.colored.size(); ++i) {
      colors.push_back(geom::distance_color(rep.distances.per_point[i], cfg.color_threshold));
    }
    rep.colored.colors = std::move(colors);
  }
  return rep;
}

}  // namespace depthprep
