#include <cmath>

#include <gtest/gtest.h>

#include "advtex/scene.hpp"

using namespace advtex;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Camera, OrbitConventionAnchors) {
  const Camera front = camera_from_orbit(2, 0, 0, 45, 64, 64);
  EXPECT_NEAR((front.position - Vec3(0, 0, 2)).norm(), 0, 1e-12);
  EXPECT_NEAR((front.forward - Vec3(0, 0, -1)).norm(), 0, 1e-12);
  EXPECT_NEAR((front.right - Vec3(1, 0, 0)).norm(), 0, 1e-12);
  EXPECT_NEAR((front.up - Vec3(0, 1, 0)).norm(), 0, 1e-12);

  const Camera side = camera_from_orbit(2, 90, 0, 45, 64, 64);
  EXPECT_NEAR((side.position - Vec3(2, 0, 0)).norm(), 0, 1e-12);

  const Camera high = camera_from_orbit(2, 0, 75, 45, 64, 64);
  EXPECT_NEAR(high.position.x(), 0.0, 1e-12);
  EXPECT_NEAR(high.position.y(), 1.932, 1e-3);
  EXPECT_NEAR(high.position.z(), 0.518, 1e-3);
  EXPECT_NEAR(high.position.y(), 2 * std::sin(75 * std::numbers::pi / 180), 1e-12);
}

TEST(Camera, ProjectsOriginToImageCentre) {
  const Camera cam = camera_from_orbit(3, 37, 20, 45, 128, 96);
  const ScreenPoint p = cam.project(Vec3::Zero());
  EXPECT_NEAR(p.x, 64.0, 1e-9);
  EXPECT_NEAR(p.y, 48.0, 1e-9);
  EXPECT_NEAR(p.depth, 3.0, 1e-12);
  // Up in the world projects upwards on screen (smaller y).
  EXPECT_LT(cam.project(Vec3(0, 0.5, 0)).y, 48.0);
}

TEST(Camera, RejectsInvalidParameters) {
  EXPECT_EQ(code_of([] { camera_from_orbit(2, 0, 90, 45, 64, 64); }), ErrorCode::GimbalLock);
  EXPECT_EQ(code_of([] { camera_from_orbit(2, 0, -95, 45, 64, 64); }), ErrorCode::GimbalLock);
  EXPECT_EQ(code_of([] { camera_from_orbit(0, 0, 0, 45, 64, 64); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { camera_from_orbit(2, 0, 0, 180, 64, 64); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { camera_from_orbit(2, 0, 0, 45, 8, 64); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { camera_from_orbit(2, 0, 89.5, 45, 64, 64); }), ErrorCode::InvalidConfig);
}

TEST(Light, DefaultsAreFrontalAtSeventyFiveDegrees) {
  const DirectionalLight l;
  EXPECT_DOUBLE_EQ(l.azimuth, 0.0);
  EXPECT_DOUBLE_EQ(l.elevation, 75.0);
  EXPECT_LE(l.ambient_strength + l.diffuse_strength, 1.0);
  EXPECT_NEAR(l.direction().norm(), 1.0, 1e-12);
  EXPECT_EQ(code_of([] { validate_light(DirectionalLight{0, 75, 0.8, 0.3}); }), ErrorCode::InvalidConfig);
}

TEST(Rig, SixtyViewsOverFourElevationLevels) {
  SceneConfig cfg;
  cfg.rig.elevation_min = 0;
  cfg.rig.elevation_max = 40;
  const ViewRig rig = build_view_rig(cfg);
  ASSERT_EQ(rig.size(), 60u);
  const double levels[] = {0.0, 40.0 / 3, 80.0 / 3, 40.0};
  for (std::size_t i = 0; i < rig.size(); ++i) {
    EXPECT_NEAR(rig.views[i].azimuth, 6.0 * i, 1e-9);
    EXPECT_NEAR(rig.views[i].elevation, levels[i % 4], 1e-9);
    EXPECT_NEAR(rig.views[i].position.norm(), cfg.rig.distance, 1e-6);
    EXPECT_EQ(rig.views[i].width, rig.views[0].width);
  }
  ASSERT_EQ(rig.lights.size(), 1u);
  EXPECT_DOUBLE_EQ(rig.lights[0].elevation, 75.0);
}

TEST(Rig, SingleViewIsFrontal) {
  SceneConfig cfg;
  cfg.rig.n_views = 1;
  const ViewRig rig = build_view_rig(cfg);
  ASSERT_EQ(rig.size(), 1u);
  EXPECT_NEAR((rig.views[0].position - Vec3(0, 0, cfg.rig.distance)).norm(), 0, 1e-12);
}

TEST(Rig, DeterministicAndPeriodicInAzimuth) {
  SceneConfig cfg;
  cfg.rig.elevation_max = 30;
  const ViewRig a = build_view_rig(cfg);
  const ViewRig b = build_view_rig(cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.views[i].position, b.views[i].position);
    const Camera& v = a.views[i];
    const Camera turned = camera_from_orbit(v.distance, v.azimuth + 360.0, v.elevation, v.fov_y, v.width, v.height);
    EXPECT_NEAR((turned.position - v.position).norm(), 0, 1e-12);
    EXPECT_DOUBLE_EQ(turned.azimuth, v.azimuth);
  }
}

TEST(Rig, LightsCycleAcrossViews) {
  SceneConfig cfg;
  cfg.rig.n_views = 6;
  cfg.lights = {DirectionalLight{0, 75, 0.6, 0.35}, DirectionalLight{90, 30, 0.5, 0.4}};
  const ViewRig rig = build_view_rig(cfg);
  EXPECT_DOUBLE_EQ(rig.light_for(0).azimuth, 0.0);
  EXPECT_DOUBLE_EQ(rig.light_for(1).azimuth, 90.0);
  EXPECT_DOUBLE_EQ(rig.light_for(4).azimuth, 0.0);
}

TEST(SceneConfig, Validation) {
  SceneConfig cfg;
  cfg.rig.elevation_min = 20;
  cfg.rig.elevation_max = 10;
  EXPECT_EQ(code_of([&] { validate_scene_config(cfg); }), ErrorCode::InvalidConfig);
  cfg = SceneConfig{};
  cfg.rig.n_views = 0;
  EXPECT_EQ(code_of([&] { validate_scene_config(cfg); }), ErrorCode::InvalidConfig);
  cfg = SceneConfig{};
  cfg.background = Rgb{0.5f, 1.5f, 0.0f};
  EXPECT_EQ(code_of([&] { validate_scene_config(cfg); }), ErrorCode::InvalidConfig);
}

TEST(Background, ArgmaxWithTiesToBlack) {
  auto pick = [](double white, double black) {
    return choose_background([&](const Rgb& bg) { return bg == kWhite ? white : black; });
  };
  EXPECT_EQ(pick(0.9, 0.5), kWhite);
  EXPECT_EQ(pick(0.7, 0.7), kBlack);
  EXPECT_EQ(pick(0.9, 0.95), kBlack);
}
