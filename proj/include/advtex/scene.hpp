#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/mesh.hpp"

namespace advtex {

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Unit vector for an orbit direction: azimuth 0 looks down +Z, 90 down +X,
/// positive elevation raises towards +Y.
inline Vec3 orbit_direction(double azimuth_deg, double elevation_deg) {
  const double a = deg_to_rad(azimuth_deg);
  const double e = deg_to_rad(elevation_deg);
  return Vec3(std::cos(e) * std::sin(a), std::sin(e), std::cos(e) * std::cos(a));
}

struct ScreenPoint {
  double x = 0.0;      // pixels, left to right
  double y = 0.0;      // pixels, top to bottom
  double depth = 0.0;  // distance along the view axis, positive in front
};

/// Pinhole camera orbiting the origin, looking at it with +Y up.
struct Camera {
  double distance = 3.0;
  double azimuth = 0.0;
  double elevation = 0.0;
  double fov_y = 45.0;
  int width = 128;
  int height = 128;

  Vec3 position = Vec3::Zero();
  Vec3 right = Vec3::UnitX();
  Vec3 up = Vec3::UnitY();
  Vec3 forward = -Vec3::UnitZ();

  ScreenPoint project(const Vec3& world) const {
    const Vec3 d = world - position;
    const double depth = forward.dot(d);
    const double tan_half = std::tan(deg_to_rad(fov_y) / 2.0);
    const double aspect = static_cast<double>(width) / height;
    const double ndc_x = right.dot(d) / (depth * tan_half * aspect);
    const double ndc_y = up.dot(d) / (depth * tan_half);
    return {(ndc_x + 1.0) * 0.5 * width, (1.0 - ndc_y) * 0.5 * height, depth};
  }

  /// World-space direction of the ray through a (sub)pixel position.
  Vec3 ray_direction(double px, double py) const {
    const double tan_half = std::tan(deg_to_rad(fov_y) / 2.0);
    const double aspect = static_cast<double>(width) / height;
    const double ndc_x = px / width * 2.0 - 1.0;
    const double ndc_y = 1.0 - py / height * 2.0;
    return (forward + right * (ndc_x * tan_half * aspect) + up * (ndc_y * tan_half)).normalized();
  }
};

inline Camera camera_from_orbit(double distance, double azimuth, double elevation, double fov_y,
                                int width, int height) {
  if (std::abs(elevation) >= 90.0) {
    fail(ErrorCode::GimbalLock, "camera elevation must satisfy |elevation| < 90");
  }
  if (!(distance > 0.0)) fail(ErrorCode::InvalidConfig, "camera distance must be positive");
  if (std::abs(elevation) > 89.0) {
    fail(ErrorCode::InvalidConfig, "camera elevation must lie in [-89, 89]");
  }
  if (!(fov_y > 1.0 && fov_y < 179.0)) fail(ErrorCode::InvalidConfig, "fov_y must lie in (1, 179)");
  if (width < 16 || height < 16) fail(ErrorCode::InvalidConfig, "camera resolution must be >= 16");

  Camera cam;
  cam.distance = distance;
  cam.azimuth = std::fmod(std::fmod(azimuth, 360.0) + 360.0, 360.0);
  cam.elevation = elevation;
  cam.fov_y = fov_y;
  cam.width = width;
  cam.height = height;
  cam.position = distance * orbit_direction(cam.azimuth, elevation);
  cam.forward = -cam.position.normalized();
  cam.right = cam.forward.cross(Vec3::UnitY()).normalized();
  cam.up = cam.right.cross(cam.forward);
  return cam;
}

struct DirectionalLight {
  double azimuth = 0.0;
  double elevation = 75.0;
  double diffuse_strength = 0.6;
  double ambient_strength = 0.35;

  /// Unit vector pointing from the surface towards the light.
  Vec3 direction() const { return orbit_direction(azimuth, elevation); }
};

inline void validate_light(const DirectionalLight& light) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(light.diffuse_strength) || !unit(light.ambient_strength)) {
    fail(ErrorCode::InvalidConfig, "light strengths must lie in [0,1]");
  }
  // Keeps every shading scalar <= 1, so the texture-space ball bounds every view.
  if (light.diffuse_strength + light.ambient_strength > 1.0) {
    fail(ErrorCode::InvalidConfig, "diffuse_strength + ambient_strength must not exceed 1");
  }
}

inline constexpr Rgb kBlack{0.0f, 0.0f, 0.0f};
inline constexpr Rgb kWhite{1.0f, 1.0f, 1.0f};

struct ViewRig {
  std::vector<Camera> views;
  std::vector<DirectionalLight> lights{DirectionalLight{}};
  Rgb background = kBlack;

  std::size_t size() const noexcept { return views.size(); }
  /// Lights cycle across views; a single light is shared by every view.
  const DirectionalLight& light_for(std::size_t view) const { return lights[view % lights.size()]; }
};

struct RigParams {
  int n_views = 60;
  double distance = 3.0;
  double elevation_min = 0.0;
  double elevation_max = 40.0;
  int elevation_levels = 4;
  double fov_y = 45.0;
  int width = 128;
  int height = 128;
};

/// Everything the attacker may know about a scene. Target-renderer settings
/// live elsewhere (see target.hpp).
struct SceneConfig {
  std::string object_id;
  int label = 0;
  std::filesystem::path mesh_path;
  std::filesystem::path texture_path;
  RigParams rig;
  std::vector<DirectionalLight> lights{DirectionalLight{}};
  std::optional<Rgb> background;  // empty: choose white/black by accuracy
};

inline void validate_scene_config(const SceneConfig& cfg) {
  if (cfg.rig.n_views < 1) fail(ErrorCode::InvalidConfig, "n_views must be >= 1");
  if (cfg.rig.elevation_levels < 1) fail(ErrorCode::InvalidConfig, "elevation_levels must be >= 1");
  if (cfg.rig.elevation_min > cfg.rig.elevation_max) {
    fail(ErrorCode::InvalidConfig, "elevation_min must not exceed elevation_max");
  }
  if (cfg.label < 0) fail(ErrorCode::InvalidConfig, "label must be non-negative");
  if (cfg.lights.empty()) fail(ErrorCode::InvalidConfig, "at least one light is required");
  for (const auto& l : cfg.lights) validate_light(l);
  if (cfg.background) {
    for (float c : *cfg.background) {
      if (!(c >= 0.0f && c <= 1.0f)) fail(ErrorCode::InvalidConfig, "background must lie in [0,1]^3");
    }
  }
}

/// Elevation of view `i`: cycles through an even grid over the configured range.
inline double rig_elevation(const RigParams& rig, int i) {
  const int levels = rig.elevation_max > rig.elevation_min ? rig.elevation_levels : 1;
  if (levels == 1) return rig.elevation_min;
  const int k = i % levels;
  return rig.elevation_min + (rig.elevation_max - rig.elevation_min) * k / (levels - 1);
}

inline ViewRig build_view_rig(const SceneConfig& cfg) {
  validate_scene_config(cfg);
  ViewRig rig;
  rig.views.reserve(cfg.rig.n_views);
  for (int i = 0; i < cfg.rig.n_views; ++i) {
    const double azimuth = 360.0 * i / cfg.rig.n_views;
    rig.views.push_back(camera_from_orbit(cfg.rig.distance, azimuth, rig_elevation(cfg.rig, i),
                                          cfg.rig.fov_y, cfg.rig.width, cfg.rig.height));
  }
  rig.lights = cfg.lights;
  rig.background = cfg.background.value_or(kBlack);
  return rig;
}

/// White or black, whichever scores the higher accuracy; ties go to black.
template <typename AccuracyFn>
Rgb choose_background(AccuracyFn&& accuracy_with) {
  const double white = accuracy_with(kWhite);
  const double black = accuracy_with(kBlack);
  return white > black ? kWhite : kBlack;
}

}  // namespace advtex
