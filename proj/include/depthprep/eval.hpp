#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "depthprep/core.hpp"

namespace depthprep::eval {

struct LossWeights {
  double object_weight = 1.0;
  double background_weight = 0.01;

  void validate() const {
    if (!(object_weight > 0.0 && background_weight > 0.0)) {
      throw ValidationError("loss weights must be positive");
    }
    if (object_weight < background_weight) {
      throw ValidationError("object weight must not be below the background weight");
    }
  }
};

// All metrics look only at pixels whose definition bit is set.

inline double rmse(const DepthMap& pred, const DepthMap& gt, const DefinitionMap& definition) {
  require_same_shape(pred, gt, "prediction vs ground truth");
  require_same_shape(gt, definition, "ground truth vs definition");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!definition[i]) continue;
    const double e = static_cast<double>(pred[i]) - static_cast<double>(gt[i]);
    sum += e * e;
    ++n;
  }
  if (n == 0) throw ValidationError("rmse: no defined pixels");
  return std::sqrt(sum / static_cast<double>(n));
}

inline double object_rmse(const DepthMap& pred, const DepthMap& gt, const ObjectMap& object,
                          const DefinitionMap& definition) {
  require_same_shape(pred, gt, "prediction vs ground truth");
  require_same_shape(gt, object, "ground truth vs object map");
  require_same_shape(gt, definition, "ground truth vs definition");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!object[i] || !definition[i]) continue;
    const double e = static_cast<double>(pred[i]) - static_cast<double>(gt[i]);
    sum += e * e;
    ++n;
  }
  if (n == 0) throw ValidationError("object rmse: no defined object pixels");
  return std::sqrt(sum / static_cast<double>(n));
}

/// Weighted L1 error normalized by the sum of weights.
inline double object_loss(const DepthMap& pred, const DepthMap& gt, const ObjectMap& object,
                          const DefinitionMap& definition, const LossWeights& weights = {}) {
  weights.validate();
  require_same_shape(pred, gt, "prediction vs ground truth");
  require_same_shape(gt, object, "ground truth vs object map");
  require_same_shape(gt, definition, "ground truth vs definition");
  // per-class sums keep the denominator an exact count times a weight
  double err_obj = 0.0, err_bg = 0.0;
  std::size_t n_obj = 0, n_bg = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!definition[i]) continue;
    const double e = std::abs(static_cast<double>(pred[i]) - static_cast<double>(gt[i]));
    if (object[i]) {
      err_obj += e;
      ++n_obj;
    } else {
      err_bg += e;
      ++n_bg;
    }
  }
  if (n_obj + n_bg == 0) throw ValidationError("object loss: no defined pixels");
  const double num = weights.object_weight * err_obj + weights.background_weight * err_bg;
  const double den = weights.object_weight * static_cast<double>(n_obj) +
                     weights.background_weight * static_cast<double>(n_bg);
  return num / den;
}

// ---- time model -----------------------------------------------------------------

struct TimeSample {
  double pixels = 0.0;
  double seconds = 0.0;
};

/// t(n) = c0 + c1 n + c2 n^2, fit by least squares.
class TimeModel {
 public:
  TimeModel() = default;
  TimeModel(double c0, double c1, double c2) : coeffs_{c0, c1, c2} {}

  double predict(double pixels) const {
    return coeffs_[0] + pixels * (coeffs_[1] + pixels * coeffs_[2]);
  }
  const std::array<double, 3>& coefficients() const noexcept { return coeffs_; }

 private:
  std::array<double, 3> coeffs_{0.0, 0.0, 0.0};
};

inline TimeModel fit_time_model(std::span<const TimeSample> samples) {
  std::set<double> distinct;
  double scale = 0.0;
  for (const auto& s : samples) {
    distinct.insert(s.pixels);
    scale = std::max(scale, std::abs(s.pixels));
  }
  if (distinct.size() < 3) {
    throw DegenerateError("time model needs at least 3 distinct pixel counts");
  }
  // fit on n / scale to keep the Vandermonde matrix well conditioned
  Eigen::MatrixXd a(static_cast<Eigen::Index>(samples.size()), 3);
  Eigen::VectorXd t(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i].pixels / scale;
    const auto row = static_cast<Eigen::Index>(i);
    a(row, 0) = 1.0;
    a(row, 1) = x;
    a(row, 2) = x * x;
    t(row) = samples[i].seconds;
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(t);
  return TimeModel(c[0], c[1] / scale, c[2] / (scale * scale));
}

// ---- benchmarking ---------------------------------------------------------------

struct BenchRecord {
  std::string stage;
  std::size_t width = 0;
  std::size_t height = 0;
  double seconds = 0.0;
  std::size_t repetitions = 1;
};

inline double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

/// Runs `stage` `reps` times on the calling thread and records the median wall time.
inline BenchRecord time_stage(const std::string& name, std::size_t width, std::size_t height,
                              std::size_t reps, const std::function<void()>& stage) {
  if (reps == 0) throw ValidationError("repetitions must be >= 1");
  std::vector<double> times;
  times.reserve(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    stage();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9));
  }
  return {name, width, height, median(std::move(times)), reps};
}

}  // namespace depthprep::eval
