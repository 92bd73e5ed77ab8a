#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "advtex/classifier.hpp"
#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/parallel.hpp"
#include "advtex/rasterizer.hpp"
#include "advtex/scene.hpp"
#include "advtex/surrogate.hpp"
#include "advtex/target.hpp"

namespace advtex {

struct RigAccuracy {
  double accuracy = 0.0;
  std::vector<int> predictions;  // per view, rig order
};

/// Fraction of rig views classified as the scene label, rendering with `texture`.
inline RigAccuracy accuracy_over_rig(const Scene& scene, const ViewRig& rig,
                                     std::span<const FragmentBuffer> fragments,
                                     const Texture<float>& texture, const ClassifierModel<float>& model,
                                     RendererKind renderer, const TargetSettings& target = {},
                                     int threads = 1) {
  if (fragments.size() != rig.size()) fail(ErrorCode::RigMismatch, "fragment count differs from rig size");
  RigAccuracy out;
  out.predictions.resize(rig.size());
  parallel_for(rig.size(), threads, [&](std::size_t v) {
    const Image<float> img =
        renderer == RendererKind::Surrogate
            ? shade(fragments[v], texture, rig.background)
            : detail::shade_target(fragments[v], texture, rig.views[v], rig.light_for(v),
                                   rig.background, target);
    out.predictions[v] = predict<float>(model.forward(img));
  });
  std::size_t correct = 0;
  for (int p : out.predictions) correct += (p == scene.label) ? 1 : 0;
  out.accuracy = rig.size() ? static_cast<double>(correct) / rig.size() : 0.0;
  return out;
}

inline RigAccuracy accuracy_over_rig(const Scene& scene, const ViewRig& rig, const Texture<float>& texture,
                                     const ClassifierModel<float>& model, RendererKind renderer,
                                     const TargetSettings& target = {}, int threads = 1) {
  const auto fragments = rasterize_rig(scene, rig);
  return accuracy_over_rig(scene, rig, fragments, texture, model, renderer, target, threads);
}

/// Background choice by clean accuracy under `renderer`; ties go to black.
inline Rgb choose_background(const Scene& scene, ViewRig rig, const ClassifierModel<float>& model,
                             RendererKind renderer, const TargetSettings& target = {}, int threads = 1) {
  const auto fragments = rasterize_rig(scene, rig);
  return choose_background([&](const Rgb& bg) {
    rig.background = bg;
    return accuracy_over_rig(scene, rig, fragments, scene.texture, model, renderer, target, threads).accuracy;
  });
}

/// (A_before - A_after) / A_before. Undefined when nothing was recognised
/// before the attack.
inline double accuracy_drop(double before, double after) {
  if (!(before > 0.0)) fail(ErrorCode::NotApplicable, "A_before is zero: accuracy drop is n.a.");
  return (before - after) / before;
}

inline std::optional<double> try_accuracy_drop(double before, double after) {
  if (!(before > 0.0)) return std::nullopt;
  return accuracy_drop(before, after);
}

/// ||a - b||_1 / |a|, over every component.
template <typename T>
double texel_change(const Image<T>& before, const Image<T>& after) {
  if (!before.same_shape(after)) fail(ErrorCode::ShapeMismatch, "textures differ in shape");
  if (before.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    total += std::abs(static_cast<double>(after[i]) - static_cast<double>(before[i]));
  }
  return total / static_cast<double>(before.size());
}

/// Share of components that moved at all (|diff| > 1e-9). Diagnostic only.
template <typename T>
double changed_texel_fraction(const Image<T>& before, const Image<T>& after) {
  if (!before.same_shape(after)) fail(ErrorCode::ShapeMismatch, "textures differ in shape");
  if (before.empty()) return 0.0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (std::abs(static_cast<double>(after[i]) - static_cast<double>(before[i])) > 1e-9) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(before.size());
}

struct ViewPrediction {
  int view = 0;
  int clean = 0;
  int adversarial = 0;

  bool operator==(const ViewPrediction&) const = default;
};

struct AttackReport {
  std::string object_id;
  int label = 0;
  std::string renderer;  // "surrogate" | "target"
  std::string classifier_id;
  double epsilon = 0.0;
  double alpha = 0.0;
  int steps = 0;
  std::optional<double> tau;
  int view_batch = 0;
  bool random_start = false;
  std::uint64_t seed = 0;
  double a_before = 0.0;
  double a_after = 0.0;
  std::optional<double> a_drop;  // empty: n.a.
  double n_pct = 0.0;
  double changed_texel_fraction = 0.0;
  std::vector<ViewPrediction> predictions;
  std::vector<double> loss_trajectory;
  double wall_seconds = 0.0;  // kept out of the serialised report (see report_io.hpp)

  bool operator==(const AttackReport&) const = default;
};

/// Builds a report from clean and attacked rig accuracies.
inline AttackReport make_report(const Scene& scene, RendererKind renderer, const RigAccuracy& clean,
                                const RigAccuracy& attacked, const Texture<float>& before,
                                const Texture<float>& after) {
  AttackReport r;
  r.object_id = scene.object_id;
  r.label = scene.label;
  r.renderer = std::string(to_string(renderer));
  r.a_before = clean.accuracy;
  r.a_after = attacked.accuracy;
  r.a_drop = try_accuracy_drop(r.a_before, r.a_after);
  r.n_pct = texel_change(before, after);
  r.changed_texel_fraction = changed_texel_fraction(before, after);
  for (std::size_t v = 0; v < clean.predictions.size(); ++v) {
    r.predictions.push_back({static_cast<int>(v), clean.predictions[v], attacked.predictions[v]});
  }
  return r;
}

namespace detail {

inline std::string fmt_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10f", v);
  return buf;
}

inline std::string fmt_tau(const std::optional<double>& tau) {
  if (!tau) return "none";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", *tau);
  return buf;
}

inline std::string fmt_eps(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

}  // namespace detail

struct EmittedReport {
  std::string table;
  std::string scatter;
};

inline constexpr const char* kTableHeader =
    "object,renderer,classifier,epsilon,tau,a_before,a_after,a_drop,n_pct,changed_texel_fraction,avg_a_drop\n";
inline constexpr const char* kScatterHeader =
    "n_pct,a_drop,epsilon,tau,renderer,classifier,object,changed_texel_fraction\n";

/// One row per report, sorted by (renderer, classifier, epsilon, tau, object).
/// `avg_a_drop` is the mean A_drop of the row's (renderer, classifier,
/// epsilon, tau) group over objects whose A_drop is defined; "n.a." cells are
/// written literally and excluded from averages.
inline EmittedReport emit_report(std::vector<AttackReport> reports) {
  if (reports.empty()) fail(ErrorCode::InvalidArgument, "no attack reports to emit");
  auto tau_key = [](const std::optional<double>& t) { return t ? *t : -1.0; };
  std::sort(reports.begin(), reports.end(), [&](const AttackReport& a, const AttackReport& b) {
    return std::tuple(a.renderer, a.classifier_id, a.epsilon, tau_key(a.tau), a.object_id) <
           std::tuple(b.renderer, b.classifier_id, b.epsilon, tau_key(b.tau), b.object_id);
  });
  using GroupKey = std::tuple<std::string, std::string, double, double>;
  std::map<GroupKey, std::pair<double, int>> groups;
  for (const auto& r : reports) {
    auto& g = groups[GroupKey{r.renderer, r.classifier_id, r.epsilon, tau_key(r.tau)}];
    if (r.a_drop) {
      g.first += *r.a_drop;
      ++g.second;
    }
  }
  EmittedReport out;
  out.table = kTableHeader;
  out.scatter = kScatterHeader;
  for (const auto& r : reports) {
    const auto& g = groups[GroupKey{r.renderer, r.classifier_id, r.epsilon, tau_key(r.tau)}];
    const std::string drop = r.a_drop ? detail::fmt_number(*r.a_drop) : "n.a.";
    const std::string avg = g.second ? detail::fmt_number(g.first / g.second) : "n.a.";
    out.table += r.object_id + "," + r.renderer + "," + r.classifier_id + "," + detail::fmt_eps(r.epsilon) +
                 "," + detail::fmt_tau(r.tau) + "," + detail::fmt_number(r.a_before) + "," +
                 detail::fmt_number(r.a_after) + "," + drop + "," + detail::fmt_number(r.n_pct) + "," +
                 detail::fmt_number(r.changed_texel_fraction) + "," + avg + "\n";
    out.scatter += detail::fmt_number(r.n_pct) + "," + drop + "," + detail::fmt_eps(r.epsilon) + "," +
                   detail::fmt_tau(r.tau) + "," + r.renderer + "," + r.classifier_id + "," + r.object_id +
                   "," + detail::fmt_number(r.changed_texel_fraction) + "\n";
  }
  return out;
}

}  // namespace advtex
