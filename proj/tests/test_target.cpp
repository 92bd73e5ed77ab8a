#include <cmath>

#include <gtest/gtest.h>

#include "advtex/primitives.hpp"
#include "advtex/target.hpp"

using namespace advtex;

namespace {

Scene checker_cube() {
  auto [mesh, tex] = generate_primitive("cube", 2, "checker-8");
  return Scene{"cube", 0, std::move(mesh), std::move(tex)};
}

ViewRig rig_of(int n_views) {
  SceneConfig cfg;
  cfg.rig.n_views = n_views;
  cfg.rig.width = cfg.rig.height = 64;
  return build_view_rig(cfg);
}

double mean_abs_gap(const Scene& s, const ViewRig& rig, const TargetSettings& settings) {
  const auto a = render_rig(s, s.texture, rig, RendererKind::Surrogate);
  const auto b = render_rig(s, s.texture, rig, RendererKind::Target, settings);
  double total = 0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < a.size(); ++v) {
    for (std::size_t i = 0; i < a[v].size(); ++i, ++n) total += std::abs(a[v][i] - b[v][i]);
  }
  return total / n;
}

}  // namespace

TEST(Target, GammaOnlyExample) {
  FragmentBuffer buf;
  buf.width = buf.height = 1;
  buf.tex_width = buf.tex_height = 4;
  Fragment f;
  f.face = 0;
  f.texel = {0, 0, 0, 0};
  f.weight = {1, 0, 0, 0};
  f.shading = 1.0f;
  buf.pixels = {f};
  Texture<float> tex(4, 4, 3, 0.4f);
  TargetSettings gamma_only;
  gamma_only.spec_strength = 0.0;
  const Image<float> img = detail::shade_target(buf, tex, camera_from_orbit(3, 0, 0, 45, 64, 64),
                                               DirectionalLight{}, kBlack, gamma_only);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(img[c], 0.659, 1e-3);
}

TEST(Target, DegenerateSettingsMatchSurrogateBitwise) {
  for (const char* kind : {"cube", "torus", "cone"}) {
    auto [mesh, tex] = generate_primitive(kind, kind == std::string("cube") ? 2 : 16, "noise-5");
    const Scene s{kind, 0, mesh, tex};
    const ViewRig rig = rig_of(12);
    const auto a = render_rig(s, s.texture, rig, RendererKind::Surrogate);
    const auto b = render_rig(s, s.texture, rig, RendererKind::Target, TargetSettings::degenerate());
    for (std::size_t v = 0; v < rig.size(); ++v) EXPECT_TRUE(a[v] == b[v]) << kind << " view " << v;
  }
}

TEST(Target, DefaultSettingsOpenAVisibleGap) {
  EXPECT_GT(mean_abs_gap(checker_cube(), rig_of(12), TargetSettings{}), 0.02);
}

TEST(Target, GapGrowsWithSpecularStrength) {
  const Scene s = checker_cube();
  const ViewRig rig = rig_of(8);
  double previous = -1;
  for (double k : {0.0, 0.1, 0.2, 0.3, 0.5}) {
    TargetSettings t;
    t.spec_strength = k;
    t.gamma = false;
    const double gap = mean_abs_gap(s, rig, t);
    EXPECT_GE(gap, previous) << "spec_strength " << k;
    previous = gap;
  }
  EXPECT_GT(previous, 0.0);
}

TEST(Target, OutputStaysInUnitRange) {
  const Scene s = checker_cube();
  TargetSettings harsh;
  harsh.spec_strength = 1.0;
  harsh.shininess = 1.0;
  for (const auto& img : render_rig(s, s.texture, rig_of(6), RendererKind::Target, harsh)) {
    for (float v : img.data()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(Target, RigRenderingFollowsRigOrder) {
  const Scene s = checker_cube();
  const ViewRig rig = rig_of(5);
  const auto all = render_rig(s, s.texture, rig, RendererKind::Target);
  const auto cached = render_rig(rasterize_rig(s, rig), s.texture, rig, RendererKind::Target);
  ASSERT_EQ(all.size(), rig.size());
  for (std::size_t v = 0; v < rig.size(); ++v) {
    EXPECT_TRUE(all[v] == render_target(s, rig, v, TargetSettings{}));
    EXPECT_TRUE(all[v] == cached[v]);
  }
  EXPECT_THROW(render_rig(rasterize_rig(s, rig_of(4)), s.texture, rig, RendererKind::Target), Error);
}

TEST(Target, SettingsValidation) {
  TargetSettings t;
  t.spec_strength = 1.5;
  EXPECT_THROW(validate_target_settings(t), Error);
  t = TargetSettings{};
  t.shininess = 0.5;
  EXPECT_THROW(validate_target_settings(t), Error);
  EXPECT_NO_THROW(validate_target_settings(TargetSettings::degenerate()));
  EXPECT_EQ(parse_renderer("target"), RendererKind::Target);
  EXPECT_THROW(parse_renderer("raytracer"), Error);
}
