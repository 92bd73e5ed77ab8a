#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "advtex/metrics.hpp"
#include "advtex/report_io.hpp"

using namespace advtex;

namespace {

AttackReport row(const std::string& object, double before, double after, std::optional<double> tau = std::nullopt,
                 const std::string& renderer = "surrogate") {
  AttackReport r;
  r.object_id = object;
  r.renderer = renderer;
  r.classifier_id = "clf-00000000";
  r.epsilon = 0.05;
  r.alpha = 0.01;
  r.steps = 100;
  r.tau = tau;
  r.a_before = before;
  r.a_after = after;
  r.a_drop = try_accuracy_drop(before, after);
  r.n_pct = 0.0125;
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      out.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

TEST(AccuracyDrop, Examples) {
  EXPECT_DOUBLE_EQ(accuracy_drop(1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(accuracy_drop(0.5, 0.25), 0.5);
  EXPECT_DOUBLE_EQ(accuracy_drop(0.8, 0.8), 0.0);
  EXPECT_DOUBLE_EQ(accuracy_drop(0.5, 0.75), -0.5);  // attacks may help
  try {
    accuracy_drop(0.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotApplicable);
  }
  EXPECT_FALSE(try_accuracy_drop(0.0, 0.3).has_value());
}

TEST(TexelChange, Examples) {
  Texture<float> a(4, 4, 3, 0.5f), b = a;
  EXPECT_EQ(texel_change(a, b), 0.0);
  b[0] = 0.6f;
  EXPECT_NEAR(texel_change(a, b), 0.1 / 48.0, 1e-9);
  Texture<float> shifted = a;
  for (auto& v : shifted.storage()) v += 0.05f;
  EXPECT_NEAR(texel_change(a, shifted), 0.05, 1e-7);
  EXPECT_DOUBLE_EQ(changed_texel_fraction(a, shifted), 1.0);
  EXPECT_THROW(texel_change(a, Texture<float>(4, 8, 3)), Error);
}

TEST(TexelChange, SymmetricAndSatisfiesTriangleInequality) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  auto random = [&] {
    Texture<double> t(8, 8, 3);
    for (auto& v : t.storage()) v = u(rng);
    return t;
  };
  for (int k = 0; k < 20; ++k) {
    const auto a = random(), b = random(), c = random();
    EXPECT_DOUBLE_EQ(texel_change(a, b), texel_change(b, a));
    EXPECT_LE(texel_change(a, c), texel_change(a, b) + texel_change(b, c) + 1e-12);
  }
}

TEST(EmitReport, SingleRowLayout) {
  const EmittedReport out = emit_report({row("cube", 1.0, 0.25)});
  const auto t = lines(out.table);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0] + "\n", kTableHeader);
  EXPECT_EQ(t[1],
            "cube,surrogate,clf-00000000,0.05,none,1.0000000000,0.2500000000,0.7500000000,0.0125000000,0.0000000000,"
            "0.7500000000");
  const auto s = lines(out.scatter);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1], "0.0125000000,0.7500000000,0.05,none,surrogate,clf-00000000,cube,0.0000000000");
}

TEST(EmitReport, UndefinedRowsAreMarkedAndExcludedFromAverages) {
  const EmittedReport out = emit_report({row("b", 1.0, 0.5), row("a", 0.0, 0.0), row("c", 0.5, 0.0)});
  const auto t = lines(out.table);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[1].rfind("a,", 0), 0u);  // sorted by object within the group
  EXPECT_NE(t[1].find(",n.a.,"), std::string::npos);
  for (std::size_t i = 1; i < t.size(); ++i) {
    EXPECT_EQ(t[i].substr(t[i].rfind(',') + 1), "0.7500000000");
  }
}

TEST(EmitReport, ByteStableUnderInputOrder) {
  std::vector<AttackReport> rows{row("x", 1.0, 0.0, 0.2), row("y", 0.9, 0.3), row("x", 1.0, 0.4, std::nullopt, "target"),
                                 row("y", 1.0, 0.1, 0.05)};
  const EmittedReport a = emit_report(rows);
  std::reverse(rows.begin(), rows.end());
  const EmittedReport b = emit_report(rows);
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(a.scatter, b.scatter);
  EXPECT_THROW(emit_report({}), Error);
}

TEST(ReportJson, RoundTrip) {
  AttackReport r = row("torus", 0.95, 0.1, 0.2);
  r.label = 4;
  r.view_batch = 12;
  r.random_start = true;
  r.seed = 77;
  r.changed_texel_fraction = 0.4;
  r.predictions = {{0, 4, 1}, {1, 4, 4}};
  r.loss_trajectory = {0.1, 0.7, 2.5};
  const auto back = report_from_json(nlohmann::json::parse(report_to_json(r).dump()));
  EXPECT_EQ(back, r);

  AttackReport na = row("cube", 0.0, 0.0);
  const auto j = report_to_json(na);
  EXPECT_EQ(j["metrics"]["a_drop"], "n.a.");
  EXPECT_TRUE(j["config"]["tau"].is_null());
  EXPECT_FALSE(j.contains("wall_seconds"));
  EXPECT_EQ(report_from_json(nlohmann::json::parse(j.dump())), na);
  EXPECT_THROW(report_from_json(nlohmann::json{{"object_id", "x"}}), Error);
}
