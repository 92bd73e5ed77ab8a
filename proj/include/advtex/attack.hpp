#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "advtex/classifier.hpp"
#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/parallel.hpp"
#include "advtex/rasterizer.hpp"
#include "advtex/saliency.hpp"
#include "advtex/surrogate.hpp"

namespace advtex {

struct AttackConfig {
  double epsilon = 0.05;
  double alpha = 0.01;
  int n_steps = 100;
  int view_batch = 0;  // 0: every rig view
  std::optional<double> saliency_threshold;  // recorded for reports; the mask is passed separately
  std::uint64_t seed = 0;
  bool random_start = false;
};

inline void validate_attack_config(const AttackConfig& cfg, std::size_t rig_size) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) fail(ErrorCode::InvalidArgument, "epsilon must lie in (0,1]");
  if (!(cfg.alpha > 0.0)) fail(ErrorCode::InvalidArgument, "alpha must be positive");
  if (cfg.alpha > cfg.epsilon) fail(ErrorCode::InvalidArgument, "alpha must not exceed epsilon");
  if (cfg.n_steps < 0) fail(ErrorCode::InvalidArgument, "n_steps must be non-negative");
  if (cfg.view_batch < 0 || static_cast<std::size_t>(cfg.view_batch) > rig_size) {
    fail(ErrorCode::InvalidArgument, "view_batch must lie in [0, rig size]");
  }
  if (cfg.saliency_threshold && !(*cfg.saliency_threshold > 0.0 && *cfg.saliency_threshold < 1.0)) {
    fail(ErrorCode::InvalidArgument, "saliency threshold must lie in (0,1)");
  }
}

struct AttackState {
  Texture<float> base;
  Texture<float> current;
  int step = 0;
  std::vector<double> loss_trajectory;  // expected batch loss evaluated before each step
  std::optional<TexelMask> mask;
};

struct EotGradient {
  double loss = 0.0;  // mean cross-entropy over the batch
  Texture<float> gradient;
};

/// Gradient of one view's cross-entropy with respect to the texture.
inline EotGradient view_texture_gradient(const FragmentBuffer& lit, const Texture<float>& texture,
                                         const Rgb& background, const ClassifierModel<float>& model,
                                         int label) {
  const Image<float> image = shade(lit, texture, background);
  const auto g = grad_input(model, image, label);
  return {static_cast<double>(g.loss), backprop_texture(lit, g.gradient)};
}

/// Mean texture gradient over `batch` (view indices into `fragments`). Views
/// run in parallel; the sum is taken in ascending view order.
inline EotGradient eot_gradient(const Texture<float>& texture, std::span<const FragmentBuffer> fragments,
                                std::span<const std::size_t> batch, const Rgb& background,
                                const ClassifierModel<float>& model, int label, int threads = 1) {
  if (batch.empty()) fail(ErrorCode::InvalidArgument, "empty view batch");
  std::vector<std::size_t> views(batch.begin(), batch.end());
  std::sort(views.begin(), views.end());
  std::vector<EotGradient> per_view(views.size());
  parallel_for(views.size(), threads, [&](std::size_t i) {
    per_view[i] = view_texture_gradient(fragments[views[i]], texture, background, model, label);
  });
  EotGradient out{0.0, Texture<float>(texture.width(), texture.height(), 3)};
  for (const auto& v : per_view) {
    out.loss += v.loss;
    for (std::size_t k = 0; k < out.gradient.size(); ++k) out.gradient[k] += v.gradient[k];
  }
  const auto n = static_cast<float>(views.size());
  for (auto& g : out.gradient.storage()) g /= n;
  out.loss /= static_cast<double>(views.size());
  return out;
}

/// Expected loss over all views at a given texture.
inline double expected_loss(const Texture<float>& texture, std::span<const FragmentBuffer> fragments,
                            const Rgb& background, const ClassifierModel<float>& model, int label,
                            int threads = 1) {
  std::vector<double> losses(fragments.size());
  parallel_for(fragments.size(), threads, [&](std::size_t v) {
    const auto logits = model.forward(shade(fragments[v], texture, background));
    losses[v] = cross_entropy<float>(logits, label);
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(fragments.size());
}

constexpr float sign_of(float g) { return g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f); }

/// One signed-gradient ascent step, projected onto the epsilon ball around
/// the base texture and then onto [0,1]. Texels outside the mask are left
/// untouched bit for bit.
inline AttackState pgd_step(AttackState state, const Texture<float>& gradient, const AttackConfig& cfg) {
  if (!gradient.same_shape(state.current) || !state.base.same_shape(state.current)) {
    fail(ErrorCode::ShapeMismatch, "gradient and texture shapes differ");
  }
  if (state.mask && (state.mask->width() != state.current.width() ||
                     state.mask->height() != state.current.height())) {
    fail(ErrorCode::ShapeMismatch, "mask and texture shapes differ");
  }
  const auto eps = static_cast<float>(cfg.epsilon);
  const auto alpha = static_cast<float>(cfg.alpha);
  for (std::size_t i = 0; i < state.current.size(); ++i) {
    if (state.mask && (*state.mask)[i / 3] == 0) continue;
    const float s = sign_of(gradient[i]);
    if (s == 0.0f) continue;
    const float t0 = state.base[i];
    float t = std::clamp(state.current[i] + alpha * s, t0 - eps, t0 + eps);
    state.current[i] = std::clamp(t, 0.0f, 1.0f);
  }
  ++state.step;
  return state;
}

/// Snaps an attacked texture onto the 8-bit storage grid, rounding each
/// perturbation towards zero so the stored texture stays inside the ball.
inline Texture<float> quantize_toward_base(const Texture<float>& base, const Texture<float>& current,
                                           double epsilon) {
  Texture<float> out = base;
  const auto limit = static_cast<long>(std::floor(epsilon * 255.0 + 1e-6));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = static_cast<double>(current[i]) - base[i];
    if (d == 0.0) continue;
    long levels = static_cast<long>(std::trunc(d * 255.0 + (d > 0 ? 1e-4 : -1e-4)));
    levels = std::clamp(levels, -limit, limit);
    const long b = std::clamp(static_cast<long>(to_byte(base[i])) + levels, 0L, 255L);
    out[i] = from_byte(static_cast<std::uint8_t>(b));
  }
  return out;
}

struct AttackResult {
  Texture<float> adversarial;  // quantised, what gets stored and evaluated
  Texture<float> unquantized;
  std::vector<double> loss_trajectory;
  double initial_loss = 0.0;  // over the full rig
  double final_loss = 0.0;    // over the full rig, at the stored texture
};

using StepObserver = std::function<void(const AttackState&)>;

/// Deterministic view schedule: full rig in index order, or consecutive
/// windows of a seeded permutation.
class ViewSchedule {
 public:
  ViewSchedule(std::size_t rig_size, int batch, std::uint64_t seed)
      : order_(rig_size), batch_(batch <= 0 ? rig_size : static_cast<std::size_t>(batch)) {
    std::iota(order_.begin(), order_.end(), 0);
    if (batch_ < rig_size) {
      std::mt19937_64 rng(seed);
      for (std::size_t i = order_.size(); i > 1; --i) {
        const auto j = std::min(static_cast<std::size_t>(detail::uniform01(rng) * i), i - 1);
        std::swap(order_[i - 1], order_[j]);
      }
    }
  }

  std::vector<std::size_t> batch(int step) const {
    std::vector<std::size_t> out(batch_);
    for (std::size_t j = 0; j < batch_; ++j) {
      out[j] = order_[(static_cast<std::size_t>(step) * batch_ + j) % order_.size()];
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
};

/// EOT-PGD on the texture through the surrogate renderer. `fragments` are the
/// lit rig buffers from rasterize_rig.
inline AttackResult run_attack(const Scene& scene, const ViewRig& rig,
                               std::span<const FragmentBuffer> fragments,
                               const ClassifierModel<float>& model, const AttackConfig& cfg,
                               const std::optional<TexelMask>& mask = std::nullopt, int threads = 1,
                               const StepObserver& observer = {}) {
  validate_attack_config(cfg, rig.size());
  if (fragments.size() != rig.size()) fail(ErrorCode::RigMismatch, "fragment count differs from rig size");
  AttackState state{scene.texture, scene.texture, 0, {}, mask};
  if (cfg.random_start) {
    std::mt19937_64 rng(cfg.seed ^ 0xA5A5A5A5DEADBEEFull);
    const auto eps = static_cast<float>(cfg.epsilon);
    for (std::size_t i = 0; i < state.current.size(); ++i) {
      const float u = static_cast<float>(2.0 * detail::uniform01(rng) - 1.0);
      if (mask && (*mask)[i / 3] == 0) continue;
      state.current[i] = std::clamp(state.base[i] + eps * u, 0.0f, 1.0f);
    }
  }

  AttackResult result;
  result.initial_loss = expected_loss(state.base, fragments, rig.background, model, scene.label, threads);
  const ViewSchedule schedule(rig.size(), cfg.view_batch, cfg.seed);
  for (int k = 0; k < cfg.n_steps; ++k) {
    const auto batch = schedule.batch(k);
    const EotGradient g = eot_gradient(state.current, fragments, batch, rig.background, model,
                                       scene.label, threads);
    state.loss_trajectory.push_back(g.loss);
    state = pgd_step(std::move(state), g.gradient, cfg);
    if (observer) observer(state);
  }
  result.unquantized = state.current;
  result.adversarial = quantize_toward_base(state.base, state.current, cfg.epsilon);
  result.loss_trajectory = std::move(state.loss_trajectory);
  result.final_loss = expected_loss(result.adversarial, fragments, rig.background, model, scene.label, threads);
  return result;
}

}  // namespace advtex
