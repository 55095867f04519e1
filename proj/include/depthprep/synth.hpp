#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "depthprep/core.hpp"
#include "depthprep/io.hpp"

namespace depthprep::synth {

using Vec3 = Eigen::Vector3d;

enum class ObjectKind { None, Box, Sphere, Superellipsoid };

inline std::string to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::None: return "none";
    case ObjectKind::Box: return "box";
    case ObjectKind::Sphere: return "sphere";
    case ObjectKind::Superellipsoid: return "superellipsoid";
  }
  return "none";
}

inline ObjectKind object_kind_from_string(const std::string& s) {
  if (s == "none") return ObjectKind::None;
  if (s == "box") return ObjectKind::Box;
  if (s == "sphere") return ObjectKind::Sphere;
  if (s == "superellipsoid") return ObjectKind::Superellipsoid;
  throw ValidationError("unknown object kind '" + s + "'");
}

/// A single object resting on a tilted ground plane, seen by a pinhole camera
/// at the origin looking along +z. The ground passes through (0, 0,
/// ground_depth) and recedes towards the top of the image.
struct SceneConfig {
  std::size_t width = 320;
  std::size_t height = 240;
  /// Focal length in pixels; 0 selects 1.125 * width.
  double focal_px = 0.0;
  double ground_depth = 600.0;
  double ground_tilt_deg = 30.0;

  ObjectKind object_kind = ObjectKind::Box;
  /// Box: edge lengths (along, across, height). Sphere: x is the diameter.
  /// Superellipsoid: full extents along the three local axes.
  Vec3 object_size{100.0, 100.0, 50.0};
  double superellipsoid_exponent = 4.0;
  /// Offset of the object footprint center on the ground plane (mm).
  double object_tx = 0.0;
  double object_ty = 0.0;
  double object_yaw_deg = 0.0;

  /// Projector position relative to the camera; points the projector cannot
  /// see are left undefined.
  Vec3 projector_offset{80.0, 0.0, 0.0};
  double noise_sigma = 0.3;
  std::size_t border_margin = 4;
  std::uint64_t seed = 0;

  double object_height() const {
    switch (object_kind) {
      case ObjectKind::None: return 0.0;
      case ObjectKind::Sphere: return object_size.x();
      default: return object_size.z();
    }
  }

  double focal() const { return focal_px > 0.0 ? focal_px : 1.125 * static_cast<double>(width); }

  CameraIntrinsics intrinsics() const {
    return {focal(), focal(), static_cast<double>(width) / 2.0, static_cast<double>(height) / 2.0};
  }

  void validate() const {
    if (width == 0 || height == 0) throw ValidationError("scene dimensions must be positive");
    if (!(ground_depth > object_height() + 1.0)) {
      throw ValidationError("ground depth must exceed the object height by more than 1 mm");
    }
    if (!(noise_sigma >= 0.0)) throw ValidationError("noise sigma must be non-negative");
    if (2 * border_margin >= std::min(width, height)) {
      throw ValidationError("border margin leaves no image");
    }
    if (!(std::abs(ground_tilt_deg) < 80.0)) throw ValidationError("ground tilt out of range");
    if ((object_size.array() < 0.0).any()) throw ValidationError("object size must be non-negative");
  }
};

namespace detail {

struct Hit {
  double t;
  Vec3 normal;  // world frame, not necessarily facing the ray
};

class SceneGeometry {
 public:
  explicit SceneGeometry(const SceneConfig& cfg) : cfg_(cfg) {
    const double theta = cfg.ground_tilt_deg * std::numbers::pi / 180.0;
    ground_normal_ = Vec3(0.0, std::sin(theta), std::cos(theta));
    ground_offset_ = cfg.ground_depth * std::cos(theta);
    const Vec3 up = -ground_normal_;
    const Vec3 u(1.0, 0.0, 0.0);
    const Vec3 v = up.cross(u);  // in-plane, towards the image bottom
    const double yaw = cfg.object_yaw_deg * std::numbers::pi / 180.0;
    const Vec3 uy = std::cos(yaw) * u + std::sin(yaw) * v;
    const Vec3 vy = -std::sin(yaw) * u + std::cos(yaw) * v;
    origin_ = Vec3(0.0, 0.0, cfg.ground_depth) + cfg.object_tx * u + cfg.object_ty * v;
    to_local_.row(0) = uy.transpose();
    to_local_.row(1) = vy.transpose();
    to_local_.row(2) = up.transpose();
    half_ = 0.5 * cfg.object_size;
  }

  const Vec3& ground_normal() const { return ground_normal_; }
  double ground_offset() const { return ground_offset_; }

  /// Ray parameter where origin + t * dir meets the ground, if in front.
  std::optional<double> hit_ground(const Vec3& origin, const Vec3& dir) const {
    const double denom = ground_normal_.dot(dir);
    if (denom <= 1e-12) return std::nullopt;
    const double t = (ground_offset_ - ground_normal_.dot(origin)) / denom;
    if (t <= 0.0) return std::nullopt;
    return t;
  }

  /// First intersection with the object for t in (t_min, t_max).
  std::optional<Hit> hit_object(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const {
    const Vec3 o = to_local_ * (origin - origin_);
    const Vec3 d = to_local_ * dir;
    std::optional<Hit> h;
    switch (cfg_.object_kind) {
      case ObjectKind::None: return std::nullopt;
      case ObjectKind::Box: h = hit_box(o, d, t_min, t_max); break;
      case ObjectKind::Sphere: h = hit_sphere(o, d, t_min, t_max); break;
      case ObjectKind::Superellipsoid: h = hit_superellipsoid(o, d, t_min, t_max); break;
    }
    if (h) h->normal = (to_local_.transpose() * h->normal).normalized();
    return h;
  }

  /// Object bounding-box corners in world coordinates.
  std::vector<Vec3> bounding_corners() const {
    Vec3 lo, hi;
    switch (cfg_.object_kind) {
      case ObjectKind::None: return {};
      case ObjectKind::Sphere:
        lo = Vec3(-half_.x(), -half_.x(), 0.0);
        hi = Vec3(half_.x(), half_.x(), cfg_.object_size.x());
        break;
      default:
        lo = Vec3(-half_.x(), -half_.y(), 0.0);
        hi = Vec3(half_.x(), half_.y(), cfg_.object_size.z());
        break;
    }
    std::vector<Vec3> out;
    for (int i = 0; i < 8; ++i) {
      const Vec3 local((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
      out.push_back(origin_ + to_local_.transpose() * local);
    }
    return out;
  }

 private:
  std::optional<Hit> hit_box(const Vec3& o, const Vec3& d, double t_min, double t_max) const {
    const Vec3 lo(-half_.x(), -half_.y(), 0.0);
    const Vec3 hi(half_.x(), half_.y(), cfg_.object_size.z());
    if ((hi - lo).minCoeff() <= 0.0) return std::nullopt;
    double t0 = t_min, t1 = t_max;
    int axis = -1;
    double sign = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(d[a]) < 1e-15) {
        if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
        continue;
      }
      double ta = (lo[a] - o[a]) / d[a];
      double tb = (hi[a] - o[a]) / d[a];
      double s = -1.0;
      if (ta > tb) {
        std::swap(ta, tb);
        s = 1.0;
      }
      if (ta > t0) {
        t0 = ta;
        axis = a;
        sign = s;
      }
      t1 = std::min(t1, tb);
      if (t0 > t1) return std::nullopt;
    }
    if (axis < 0) return std::nullopt;  // ray starts inside; not a surface hit
    Vec3 n = Vec3::Zero();
    n[axis] = sign;
    return Hit{t0, n};
  }

  std::optional<Hit> hit_sphere(const Vec3& o, const Vec3& d, double t_min, double t_max) const {
    const double r = half_.x();
    if (r <= 0.0) return std::nullopt;
    const Vec3 c(0.0, 0.0, r);
    const Vec3 oc = o - c;
    const double a = d.squaredNorm();
    const double b = oc.dot(d);
    const double cc = oc.squaredNorm() - r * r;
    const double disc = b * b - a * cc;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    for (double t : {(-b - sq) / a, (-b + sq) / a}) {
      if (t > t_min && t < t_max) return Hit{t, (o + t * d - c) / r};
    }
    return std::nullopt;
  }

  double superellipsoid_f(const Vec3& p) const {
    const double e = cfg_.superellipsoid_exponent;
    const double cz = half_.z();
    return std::pow(std::abs(p.x() / half_.x()), e) + std::pow(std::abs(p.y() / half_.y()), e) +
           std::pow(std::abs((p.z() - cz) / cz), e) - 1.0;
  }

  std::optional<Hit> hit_superellipsoid(const Vec3& o, const Vec3& d, double t_min, double t_max) const {
    if (half_.minCoeff() <= 0.0) return std::nullopt;
    // bounding sphere of the enclosing box
    const Vec3 c(0.0, 0.0, half_.z());
    const double r = half_.norm();
    const Vec3 oc = o - c;
    const double a = d.squaredNorm();
    const double b = oc.dot(d);
    const double disc = b * b - a * (oc.squaredNorm() - r * r);
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    double lo = std::max(t_min, (-b - sq) / a);
    const double hi = std::min(t_max, (-b + sq) / a);
    if (lo >= hi) return std::nullopt;
    constexpr int kSteps = 256;
    const double step = (hi - lo) / kSteps;
    double prev_t = lo;
    double prev_f = superellipsoid_f(o + lo * d);
    if (prev_f <= 0.0) return std::nullopt;
    for (int i = 1; i <= kSteps; ++i) {
      const double t = lo + step * i;
      const double f = superellipsoid_f(o + t * d);
      if (f <= 0.0) {
        double a0 = prev_t, a1 = t;
        for (int k = 0; k < 48; ++k) {
          const double m = 0.5 * (a0 + a1);
          (superellipsoid_f(o + m * d) > 0.0 ? a0 : a1) = m;
        }
        const Vec3 p = o + a1 * d;
        const double e = cfg_.superellipsoid_exponent;
        auto g = [&](double x, double h) { return e * std::pow(std::abs(x / h), e - 1.0) * (x < 0 ? -1.0 : 1.0) / h; };
        Vec3 n(g(p.x(), half_.x()), g(p.y(), half_.y()), g(p.z() - half_.z(), half_.z()));
        if (n.norm() == 0.0) n = Vec3::UnitZ();
        return Hit{a1, n.normalized()};
      }
      prev_t = t;
      prev_f = f;
    }
    return std::nullopt;
  }

  SceneConfig cfg_;
  Vec3 ground_normal_;
  double ground_offset_ = 0.0;
  Vec3 origin_;
  Eigen::Matrix3d to_local_;
  Vec3 half_;
};

struct Render {
  DepthMap depth;  // noiseless, defined wherever a surface is hit
  ObjectMap object;
  DefinitionMap shadow;  // 1 where the projector cannot see the surface
  IntensityMap intensity;
};

inline void check_frustum(const SceneConfig& cfg, const SceneGeometry& geo) {
  const CameraIntrinsics k = cfg.intrinsics();
  const double m = static_cast<double>(cfg.border_margin);
  for (const Vec3& p : geo.bounding_corners()) {
    if (p.z() <= 0.0) throw ValidationError("object outside frustum (behind camera)");
    const double col = k.fx * p.x() / p.z() + k.cx;
    const double row = k.fy * p.y() / p.z() + k.cy;
    if (col < m || row < m || col > static_cast<double>(cfg.width) - 1.0 - m ||
        row > static_cast<double>(cfg.height) - 1.0 - m) {
      throw ValidationError("object outside frustum");
    }
  }
}

inline Render render(const SceneConfig& cfg) {
  cfg.validate();
  const SceneGeometry geo(cfg);
  check_frustum(cfg, geo);
  const CameraIntrinsics k = cfg.intrinsics();
  const std::size_t w = cfg.width, h = cfg.height;
  Render out{DepthMap(w, h, kUndefined), ObjectMap(w, h, 0), DefinitionMap(w, h, 0),
             IntensityMap(w, h, 0.0f)};
  const Vec3 projector = cfg.projector_offset;
  constexpr double kAmbient = 0.08;

  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const Vec3 dir((static_cast<double>(c) - k.cx) / k.fx, (static_cast<double>(r) - k.cy) / k.fy, 1.0);
      const auto tg = geo.hit_ground(Vec3::Zero(), dir);
      const double t_far = tg ? *tg : 1e12;
      const auto obj = geo.hit_object(Vec3::Zero(), dir, 0.0, t_far);
      double t;
      Vec3 normal;
      double albedo;
      if (obj) {
        t = obj->t;
        normal = obj->normal;
        albedo = 0.85;
        out.object(r, c) = 1;
      } else if (tg) {
        t = *tg;
        normal = -geo.ground_normal();
        albedo = 0.55;
      } else {
        continue;
      }
      const Vec3 x = t * dir;
      out.depth(r, c) = static_cast<float>(x.z());
      if (normal.dot(dir) > 0.0) normal = -normal;

      bool lit = true;
      if (!obj) {
        const Vec3 seg = x - projector;
        lit = !geo.hit_object(projector, seg, 1e-9, 1.0 - 1e-9).has_value();
        out.shadow(r, c) = lit ? 0 : 1;
      }
      const Vec3 to_light = (projector - x).normalized();
      const double lambert = lit ? std::max(0.0, normal.dot(to_light)) : 0.0;
      const double value = std::clamp(kAmbient + (1.0 - kAmbient) * albedo * lambert, 0.0, 1.0);
      out.intensity(r, c) = io::dequantize_intensity(io::quantize_intensity(static_cast<float>(value)));
    }
  }
  return out;
}

}  // namespace detail

/// Analytic object mask: pixels whose camera ray meets the object before the ground.
inline ObjectMap gt_object_mask(const SceneConfig& config) { return detail::render(config).object; }

/// Renders a sample: noisy depth, Lambertian intensity and the definition map
/// (border frame plus projector shadows on the ground).
inline Sample generate_scene(const SceneConfig& config) {
  detail::Render rend = detail::render(config);
  const std::size_t w = config.width, h = config.height;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, config.noise_sigma > 0.0 ? config.noise_sigma : 1.0);

  Sample s;
  s.hr_depth = DepthMap(w, h, kUndefined);
  s.definition = DefinitionMap(w, h, 0);
  const std::size_t m = config.border_margin;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const float z = rend.depth(r, c);
      // draw for every pixel so the noise field does not depend on the mask
      const double n = config.noise_sigma > 0.0 ? noise(rng) : 0.0;
      const bool frame = r < m || c < m || r + m >= h || c + m >= w;
      if (frame || !is_defined(z) || rend.shadow(r, c)) continue;
      const float noisy = static_cast<float>(static_cast<double>(z) + n);
      if (!(noisy > 0.0f)) continue;
      s.hr_depth(r, c) = noisy;
      s.definition(r, c) = 1;
    }
  }
  s.intensity = std::move(rend.intensity);
  s.intrinsics = config.intrinsics();
  s.scale = 1;
  s.metadata = {{"object_kind", to_string(config.object_kind)},
                {"seed", std::to_string(config.seed)},
                {"ground_depth", std::to_string(config.ground_depth)},
                {"ground_tilt_deg", std::to_string(config.ground_tilt_deg)}};
  return s;
}

/// Per-sample variation drawn from `seed`: object kind, size, placement, yaw.
/// Fields not varied are copied from `base`.
inline SceneConfig randomized_config(const SceneConfig& base, std::uint64_t seed) {
  SceneConfig cfg = base;
  cfg.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double kind = uniform(0.0, 1.0);
  cfg.object_kind = kind < 0.45 ? ObjectKind::Box : kind < 0.85 ? ObjectKind::Sphere : ObjectKind::Superellipsoid;
  // sizes scale with the field of view so every resolution frames the object alike
  const double span = base.ground_depth * static_cast<double>(base.width) / cfg.focal();
  switch (cfg.object_kind) {
    case ObjectKind::Box:
      cfg.object_size = Vec3(uniform(0.2, 0.32) * span, uniform(0.2, 0.32) * span, uniform(0.06, 0.16) * span);
      break;
    case ObjectKind::Sphere: {
      const double dia = uniform(0.2, 0.3) * span;
      cfg.object_size = Vec3(dia, dia, dia);
      break;
    }
    default:
      cfg.object_size = Vec3(uniform(0.2, 0.3) * span, uniform(0.2, 0.3) * span, uniform(0.1, 0.2) * span);
      break;
  }
  // redraw the placement until the object is fully in view
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double reach = attempt < 32 ? 1.0 : 0.0;
    cfg.object_tx = reach * uniform(-0.12, 0.12) * span;
    cfg.object_ty = reach * uniform(-0.08, 0.08) * span;
    cfg.object_yaw_deg = uniform(0.0, 90.0);
    try {
      detail::check_frustum(cfg, detail::SceneGeometry(cfg));
      return cfg;
    } catch (const ValidationError&) {
    }
  }
  throw ValidationError("randomized object does not fit the view; enlarge the image or the ground depth");
}

inline nlohmann::json to_json(const SceneConfig& c) {
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  return {{"width", c.width},
          {"height", c.height},
          {"focal_px", c.focal()},
          {"ground_depth", c.ground_depth},
          {"ground_tilt_deg", c.ground_tilt_deg},
          {"object_kind", to_string(c.object_kind)},
          {"object_size", vec(c.object_size)},
          {"superellipsoid_exponent", c.superellipsoid_exponent},
          {"object_tx", c.object_tx},
          {"object_ty", c.object_ty},
          {"object_yaw_deg", c.object_yaw_deg},
          {"projector_offset", vec(c.projector_offset)},
          {"noise_sigma", c.noise_sigma},
          {"border_margin", c.border_margin},
          {"seed", c.seed}};
}

/// Overrides the fields present in `j` (same keys as to_json).
inline void apply_json(SceneConfig& c, const nlohmann::json& j) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  auto get_vec = [&](const char* key, Vec3& field) {
    if (!j.contains(key)) return;
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 3) throw ValidationError(std::string("scene config: ") + key + " needs 3 values");
    field = Vec3(v[0], v[1], v[2]);
  };
  try {
    get("width", c.width);
    get("height", c.height);
    get("focal_px", c.focal_px);
    get("ground_depth", c.ground_depth);
    get("ground_tilt_deg", c.ground_tilt_deg);
    if (j.contains("object_kind")) c.object_kind = object_kind_from_string(j.at("object_kind").get<std::string>());
    get_vec("object_size", c.object_size);
    get("superellipsoid_exponent", c.superellipsoid_exponent);
    get("object_tx", c.object_tx);
    get("object_ty", c.object_ty);
    get("object_yaw_deg", c.object_yaw_deg);
    get_vec("projector_offset", c.projector_offset);
    get("noise_sigma", c.noise_sigma);
    get("border_margin", c.border_margin);
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scene config: ") + e.what());
  }
}

}  // namespace depthprep::synth
