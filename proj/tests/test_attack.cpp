#include <cmath>

#include <gtest/gtest.h>

#include "advtex/attack.hpp"
#include "advtex/metrics.hpp"
#include "advtex/primitives.hpp"

using namespace advtex;

namespace {

AttackState flat_state(float base, float current) {
  AttackState s;
  s.base = Texture<float>(4, 4, 3, base);
  s.current = Texture<float>(4, 4, 3, current);
  return s;
}

struct Fixture {
  Scene scene;
  ViewRig rig;
  std::vector<FragmentBuffer> fragments;
  ClassifierModel<float> model;
};

Fixture fixture(int n_views = 6) {
  auto [mesh, tex] = generate_primitive("cube", 2, "checker-8");
  Fixture f{Scene{"cube", 1, mesh, tex}, {}, {}, ClassifierModel<float>(ClassifierSpec{})};
  SceneConfig cfg;
  cfg.rig.n_views = n_views;
  cfg.rig.width = cfg.rig.height = 32;
  f.rig = build_view_rig(cfg);
  f.fragments = rasterize_rig(f.scene, f.rig);
  ClassifierSpec spec;
  spec.input_width = spec.input_height = 32;
  spec.n_classes = 3;
  spec.blocks = {{8, 2}, {16, 2}};
  f.model = ClassifierModel<float>::random(spec, 8);
  return f;
}

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

TEST(PgdStep, SignStepProjectionAndZeroGradient) {
  AttackConfig cfg;
  cfg.epsilon = 0.05;
  cfg.alpha = 0.01;
  const Texture<float> up(4, 4, 3, 1.0f), down(4, 4, 3, -3.0f), zero(4, 4, 3, 0.0f);

  AttackState s = pgd_step(flat_state(0.5f, 0.5f), up, cfg);
  EXPECT_FLOAT_EQ(s.current[0], 0.51f);
  EXPECT_EQ(s.step, 1);

  s = pgd_step(flat_state(0.5f, 0.55f), up, cfg);
  EXPECT_FLOAT_EQ(s.current[0], 0.55f);  // already on the ball boundary

  s = pgd_step(flat_state(0.5f, 0.45f), down, cfg);
  EXPECT_FLOAT_EQ(s.current[0], 0.45f);

  s = pgd_step(flat_state(0.995f, 0.995f), up, cfg);
  EXPECT_EQ(s.current[0], 1.0f);  // box wins over the ball

  const AttackState before = flat_state(0.5f, 0.53f);
  s = pgd_step(before, zero, cfg);
  EXPECT_TRUE(s.current == before.current);

  EXPECT_EQ(code_of([&] { pgd_step(flat_state(0.5f, 0.5f), Texture<float>(4, 8, 3), cfg); }),
            ErrorCode::ShapeMismatch);
}

TEST(PgdStep, MaskedTexelsAreUntouched) {
  AttackConfig cfg;
  AttackState s = flat_state(0.5f, 0.5f);
  s.mask = TexelMask(4, 4, 1);
  (*s.mask)[3] = 1;
  const AttackState out = pgd_step(s, Texture<float>(4, 4, 3, 1.0f), cfg);
  for (std::size_t i = 0; i < out.current.size(); ++i) {
    if (i / 3 == 3) {
      EXPECT_FLOAT_EQ(out.current[i], 0.51f);
    } else {
      EXPECT_EQ(out.current[i], 0.5f);
    }
  }
}

TEST(Eot, SingleViewBatchEqualsViewGradient) {
  Fixture f = fixture();
  const std::size_t view = 2;
  const EotGradient single = view_texture_gradient(f.fragments[view], f.scene.texture, kBlack, f.model, 1);
  const EotGradient eot = eot_gradient(f.scene.texture, f.fragments, std::span<const std::size_t>(&view, 1),
                                       kBlack, f.model, 1);
  EXPECT_TRUE(single.gradient == eot.gradient);
  EXPECT_EQ(single.loss, eot.loss);
}

TEST(Eot, DuplicatedViewsAverage) {
  Fixture f = fixture();
  const std::vector<std::size_t> twice{3, 3}, pair{1, 4}, reversed{4, 1};
  const EotGradient g3 = view_texture_gradient(f.fragments[3], f.scene.texture, kBlack, f.model, 1);
  const EotGradient dup = eot_gradient(f.scene.texture, f.fragments, twice, kBlack, f.model, 1);
  EXPECT_TRUE(g3.gradient == dup.gradient);

  const EotGradient g1 = view_texture_gradient(f.fragments[1], f.scene.texture, kBlack, f.model, 1);
  const EotGradient g4 = view_texture_gradient(f.fragments[4], f.scene.texture, kBlack, f.model, 1);
  const EotGradient both = eot_gradient(f.scene.texture, f.fragments, pair, kBlack, f.model, 1);
  for (std::size_t i = 0; i < both.gradient.size(); ++i) {
    EXPECT_FLOAT_EQ(both.gradient[i], (g1.gradient[i] + g4.gradient[i]) / 2.0f);
  }
  EXPECT_TRUE(both.gradient == eot_gradient(f.scene.texture, f.fragments, reversed, kBlack, f.model, 1, 2).gradient);
}

TEST(Attack, ZeroStepsIsIdentity) {
  Fixture f = fixture();
  AttackConfig cfg;
  cfg.n_steps = 0;
  const AttackResult r = run_attack(f.scene, f.rig, f.fragments, f.model, cfg);
  EXPECT_TRUE(r.adversarial == f.scene.texture);
  EXPECT_TRUE(r.loss_trajectory.empty());
  const auto clean = accuracy_over_rig(f.scene, f.rig, f.fragments, f.scene.texture, f.model, RendererKind::Surrogate);
  const auto after = accuracy_over_rig(f.scene, f.rig, f.fragments, r.adversarial, f.model, RendererKind::Surrogate);
  if (clean.accuracy > 0) {
    EXPECT_EQ(accuracy_drop(clean.accuracy, after.accuracy), 0.0);
  }
  EXPECT_EQ(texel_change(f.scene.texture, r.adversarial), 0.0);
}

TEST(Attack, ConfigValidation) {
  auto bad = [](auto mutate) {
    AttackConfig c;
    mutate(c);
    return code_of([&] { validate_attack_config(c, 10); });
  };
  EXPECT_EQ(bad([](AttackConfig& c) { c.epsilon = 0; }), ErrorCode::InvalidArgument);
  EXPECT_EQ(bad([](AttackConfig& c) { c.epsilon = 1.5; }), ErrorCode::InvalidArgument);
  EXPECT_EQ(bad([](AttackConfig& c) { c.alpha = 0.1; }), ErrorCode::InvalidArgument);
  EXPECT_EQ(bad([](AttackConfig& c) { c.alpha = 0; }), ErrorCode::InvalidArgument);
  EXPECT_EQ(bad([](AttackConfig& c) { c.n_steps = -1; }), ErrorCode::InvalidArgument);
  EXPECT_EQ(bad([](AttackConfig& c) { c.view_batch = 11; }), ErrorCode::InvalidArgument);
  EXPECT_EQ(bad([](AttackConfig& c) { c.saliency_threshold = 1.0; }), ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(validate_attack_config(AttackConfig{}, 10));
}

TEST(Attack, QuantizationStaysInTheBallOnTheByteGrid) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f), d(-0.05f, 0.05f);
  const double eps = 0.05;
  Texture<float> base(8, 8, 3), cur(8, 8, 3);
  for (std::size_t i = 0; i < base.size(); ++i) {
    base[i] = from_byte(to_byte(u(rng)));
    cur[i] = std::clamp(base[i] + d(rng), 0.0f, 1.0f);
  }
  cur[0] = base[0];
  const Texture<float> q = quantize_toward_base(base, cur, eps);
  EXPECT_EQ(q[0], base[0]);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_LE(std::abs(q[i] - base[i]), eps + 1e-7);
    EXPECT_EQ(q[i], from_byte(to_byte(q[i])));
    EXPECT_LE(std::abs(q[i] - base[i]), std::abs(cur[i] - base[i]) + 1e-6);  // rounded toward the base
    EXPECT_GE(q[i], 0.0f);
    EXPECT_LE(q[i], 1.0f);
  }
}

TEST(Attack, StepsRespectConstraintsAndMask) {
  Fixture f = fixture();
  AttackConfig cfg;
  cfg.n_steps = 8;
  cfg.epsilon = 0.03;
  cfg.random_start = true;
  cfg.seed = 4;
  TexelMask mask(64, 64, 1);
  for (std::size_t i = 0; i < mask.size(); i += 3) mask[i] = 1;
  int steps_seen = 0;
  const AttackResult r = run_attack(f.scene, f.rig, f.fragments, f.model, cfg, mask, 1, [&](const AttackState& s) {
    ++steps_seen;
    for (std::size_t i = 0; i < s.current.size(); ++i) {
      ASSERT_LE(std::abs(s.current[i] - s.base[i]), cfg.epsilon + 1e-7);
      ASSERT_GE(s.current[i], 0.0f);
      ASSERT_LE(s.current[i], 1.0f);
      if (!mask[i / 3]) {
        ASSERT_EQ(s.current[i], s.base[i]);
      }
    }
  });
  EXPECT_EQ(steps_seen, cfg.n_steps);
  EXPECT_EQ(r.loss_trajectory.size(), 8u);
  for (std::size_t i = 0; i < r.adversarial.size(); ++i) {
    if (!mask[i / 3]) {
      EXPECT_EQ(r.adversarial[i], f.scene.texture[i]);
    }
  }
}

TEST(Attack, IncreasesTheExpectedLoss) {
  Fixture f = fixture();
  AttackConfig cfg;
  cfg.n_steps = 10;
  const AttackResult r = run_attack(f.scene, f.rig, f.fragments, f.model, cfg);
  EXPECT_GT(r.final_loss, r.initial_loss);
  EXPECT_GT(r.loss_trajectory.back(), r.loss_trajectory.front());
}

TEST(Attack, DeterministicAcrossRunsAndThreadCounts) {
  Fixture f = fixture(8);
  AttackConfig cfg;
  cfg.n_steps = 5;
  cfg.view_batch = 3;
  cfg.seed = 9;
  const AttackResult a = run_attack(f.scene, f.rig, f.fragments, f.model, cfg, std::nullopt, 1);
  const AttackResult b = run_attack(f.scene, f.rig, f.fragments, f.model, cfg, std::nullopt, 1);
  const AttackResult c = run_attack(f.scene, f.rig, f.fragments, f.model, cfg, std::nullopt, 3);
  EXPECT_TRUE(a.adversarial == b.adversarial);
  EXPECT_TRUE(a.adversarial == c.adversarial);
  EXPECT_EQ(a.loss_trajectory, c.loss_trajectory);
}

TEST(ViewSchedule, FullRigAndWindowedPermutation) {
  const ViewSchedule full(6, 0, 1);
  EXPECT_EQ(full.batch(0), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(full.batch(3), full.batch(0));

  const ViewSchedule windows(6, 2, 7);
  std::vector<int> seen(6, 0);
  for (int k = 0; k < 3; ++k) {
    for (auto v : windows.batch(k)) ++seen[v];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(windows.batch(3), windows.batch(0));
}
