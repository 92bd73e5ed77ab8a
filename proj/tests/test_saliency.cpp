#include <gtest/gtest.h>

#include "advtex/primitives.hpp"
#include "advtex/saliency.hpp"

using namespace advtex;

namespace {

FragmentBuffer one_pixel_buffer(std::int32_t texel) {
  FragmentBuffer buf;
  buf.width = 2;
  buf.height = 1;
  buf.tex_width = buf.tex_height = 4;
  Fragment f;
  f.face = 0;
  f.texel = {texel, 0, 0, 0};
  f.weight = {1, 0, 0, 0};
  buf.pixels = {f, Fragment{}};
  return buf;
}

struct Fixture {
  Scene scene;
  ViewRig rig;
  std::vector<FragmentBuffer> fragments;
  ClassifierModel<float> model;
};

Fixture fixture() {
  auto [mesh, tex] = generate_primitive("torus", 16, "checker-6");
  Fixture f{Scene{"torus", 1, mesh, tex}, {}, {}, ClassifierModel<float>(ClassifierSpec{})};
  SceneConfig cfg;
  cfg.rig.n_views = 6;
  cfg.rig.width = cfg.rig.height = 32;
  f.rig = build_view_rig(cfg);
  f.fragments = rasterize_rig(f.scene, f.rig);
  ClassifierSpec spec;
  spec.input_width = spec.input_height = 32;
  spec.n_classes = 3;
  spec.blocks = {{8, 2}, {16, 2}};
  f.model = ClassifierModel<float>::random(spec, 5);
  return f;
}

}  // namespace

TEST(Saliency, SinglePixelSplatNormalisesToOne) {
  const std::vector<FragmentBuffer> frags{one_pixel_buffer(5)};
  Image<float> sal(2, 1, 1);
  sal[0] = 0.8f;
  sal[1] = 0.6f;  // uncovered pixel: must be ignored
  const Image<float> raw = accumulate_texel_saliency(std::span<const Image<float>>(&sal, 1), frags);
  EXPECT_FLOAT_EQ(raw[5], 0.8f);
  const Image<float> t = splat_to_texels(std::span<const Image<float>>(&sal, 1), frags);
  EXPECT_FLOAT_EQ(t[5], 1.0f);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i != 5) {
      EXPECT_EQ(t[i], 0.0f);
    }
  }
}

TEST(Saliency, ScalingPixelSaliencyLeavesTexelMapUnchanged) {
  Fixture f = fixture();
  std::vector<Image<float>> sal, doubled;
  for (std::size_t v = 0; v < f.rig.size(); ++v) {
    Image<float> img = shade(f.fragments[v], f.scene.texture, kBlack);
    sal.push_back(view_saliency(f.model, img, 1));
    doubled.push_back(sal.back());
    for (auto& x : doubled.back().storage()) x *= 2.0f;
  }
  EXPECT_TRUE(splat_to_texels(sal, f.fragments) == splat_to_texels(doubled, f.fragments));
}

TEST(Saliency, MasksAreNestedAndReachable) {
  Fixture f = fixture();
  const SaliencyMap map = build_saliency_map(f.scene, f.rig, f.model, TargetSettings{}, 0.05);
  ASSERT_EQ(map.pixel_saliency.size(), f.rig.size());
  const TexelMask reach = reachable_texels(f.fragments);
  for (std::size_t i = 0; i < reach.size(); ++i) {
    if (!reach[i]) {
      EXPECT_EQ(map.texel_saliency[i], 0.0f);
    }
    EXPECT_GE(map.texel_saliency[i], 0.0f);
    EXPECT_LE(map.texel_saliency[i], 1.0f);
  }
  std::size_t previous = mask_count(map.mask);
  EXPECT_GT(previous, 0u);
  TexelMask coarser = map.mask;
  for (double tau : {0.1, 0.2, 0.5, 0.9}) {
    const TexelMask m = binarize(map.texel_saliency, tau);
    EXPECT_LE(mask_count(m), previous);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) {
        EXPECT_TRUE(coarser[i]);
        EXPECT_TRUE(reach[i]);
      }
    }
    previous = mask_count(m);
    coarser = m;
  }
}

TEST(Saliency, ThresholdMustLieStrictlyInsideUnitInterval) {
  const Image<float> t(4, 4, 1, 0.5f);
  for (double tau : {0.0, 1.0, -0.1, 1.5}) {
    try {
      binarize(t, tau);
      ADD_FAILURE() << tau;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
  }
  EXPECT_EQ(mask_count(binarize(t, 0.5)), 16u);  // threshold is inclusive
}

TEST(Saliency, MismatchedViewCountsAreRejected) {
  Fixture f = fixture();
  std::vector<Image<float>> sal(f.rig.size() - 1, Image<float>(32, 32, 1));
  try {
    accumulate_texel_saliency(sal, f.fragments);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RigMismatch);
  }
}

TEST(Saliency, ZeroModelGivesEmptyMask) {
  Fixture f = fixture();
  const ClassifierModel<float> zero(f.model.spec());
  const SaliencyMap map = build_saliency_map(f.scene, f.rig, zero, TargetSettings{}, 0.05);
  for (float v : map.texel_saliency.data()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(mask_count(map.mask), 0u);
}

TEST(Saliency, ThreadCountDoesNotChangeTheMap) {
  Fixture f = fixture();
  const SaliencyMap a = build_saliency_map(f.scene, f.rig, f.model, TargetSettings{}, 0.2, 1);
  const SaliencyMap b = build_saliency_map(f.scene, f.rig, f.model, TargetSettings{}, 0.2, 3);
  EXPECT_TRUE(a.texel_saliency == b.texel_saliency);
  EXPECT_TRUE(a.mask == b.mask);
}
