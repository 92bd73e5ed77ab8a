#pragma once

#include <algorithm>
#include <cmath>
#include <string_view>
#include <vector>

#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/rasterizer.hpp"
#include "advtex/scene.hpp"
#include "advtex/surrogate.hpp"

namespace advtex {

/// Shading-gap knobs of the target renderer. Read only by the target
/// renderer and saliency; the attack never sees them.
struct TargetSettings {
  double spec_strength = 0.3;
  double shininess = 16.0;
  bool gamma = true;
  double gamma_exponent = 1.0 / 2.2;

  /// Specular and gamma disabled: renders equal the surrogate's bit for bit.
  static TargetSettings degenerate() { return {0.0, 16.0, false, 1.0 / 2.2}; }
};

inline void validate_target_settings(const TargetSettings& s) {
  if (!(s.spec_strength >= 0.0 && s.spec_strength <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "spec_strength must lie in [0,1]");
  }
  if (!(s.shininess >= 1.0)) fail(ErrorCode::InvalidConfig, "shininess must be >= 1");
}

namespace detail {

// Only the image leaves this function: there is no gradient path through it.
inline Image<float> shade_target(const FragmentBuffer& lit, const Texture<float>& tex,
                                 const Camera& camera, const DirectionalLight& light,
                                 const Rgb& background, const TargetSettings& settings) {
  Image<float> img = shade(lit, tex, background);
  const Vec3 l = light.direction();
  const bool specular = settings.spec_strength > 0.0;
  for (std::size_t p = 0; p < lit.pixels.size(); ++p) {
    const Fragment& frag = lit.pixels[p];
    if (!frag.covered()) continue;
    float highlight = 0.0f;
    if (specular) {
      const Vec3 n(frag.normal[0], frag.normal[1], frag.normal[2]);
      const Vec3 pos(frag.position[0], frag.position[1], frag.position[2]);
      if (n.dot(l) > 0.0) {
        const Vec3 v = (camera.position - pos).normalized();
        const Vec3 h = (l + v).normalized();
        highlight = static_cast<float>(settings.spec_strength *
                                       std::pow(std::max(0.0, n.dot(h)), settings.shininess));
      }
    }
    for (int c = 0; c < 3; ++c) {
      float value = img[p * 3 + c];
      if (specular) value += highlight;
      if (settings.gamma) {
        value = static_cast<float>(std::pow(std::max(0.0f, value), settings.gamma_exponent));
      }
      img[p * 3 + c] = std::clamp(value, 0.0f, 1.0f);
    }
  }
  return img;
}

}  // namespace detail

/// Blinn-Phong highlight (white, texture independent) over the diffuse model,
/// then gamma encoding and a clamp to [0,1]. Shares the surrogate's rasterizer.
inline Image<float> render_target(const Mesh& mesh, const Texture<float>& tex, const Camera& camera,
                                  const DirectionalLight& light, const Rgb& background,
                                  const TargetSettings& settings) {
  const FragmentBuffer lit =
      light_fragments(rasterize(mesh, camera, tex.width(), tex.height()), light);
  return detail::shade_target(lit, tex, camera, light, background, settings);
}

inline Image<float> render_target(const Scene& scene, const ViewRig& rig, std::size_t view,
                                  const TargetSettings& settings) {
  return render_target(scene.mesh, scene.texture, rig.views[view], rig.light_for(view),
                       rig.background, settings);
}

enum class RendererKind { Surrogate, Target };

inline std::string_view to_string(RendererKind kind) {
  return kind == RendererKind::Surrogate ? "surrogate" : "target";
}

inline RendererKind parse_renderer(std::string_view name) {
  if (name == "surrogate") return RendererKind::Surrogate;
  if (name == "target") return RendererKind::Target;
  fail(ErrorCode::InvalidArgument, "renderer must be 'surrogate' or 'target'");
}

/// Renders the scene with `texture` from every rig view, in rig order.
/// `settings` is ignored for the surrogate.
inline std::vector<Image<float>> render_rig(const Scene& scene, const Texture<float>& texture,
                                            const ViewRig& rig, RendererKind kind,
                                            const TargetSettings& settings = {}) {
  std::vector<Image<float>> out;
  out.reserve(rig.size());
  for (std::size_t v = 0; v < rig.size(); ++v) {
    if (kind == RendererKind::Surrogate) {
      out.push_back(render_surrogate(scene.mesh, texture, rig.views[v], rig.light_for(v),
                                     rig.background, v)
                        .image);
    } else {
      out.push_back(render_target(scene.mesh, texture, rig.views[v], rig.light_for(v),
                                  rig.background, settings));
    }
  }
  return out;
}

/// Same, reusing rasterized fragments from rasterize_rig.
inline std::vector<Image<float>> render_rig(const std::vector<FragmentBuffer>& lit,
                                            const Texture<float>& texture, const ViewRig& rig,
                                            RendererKind kind, const TargetSettings& settings = {}) {
  if (lit.size() != rig.size()) fail(ErrorCode::RigMismatch, "fragment count differs from rig size");
  std::vector<Image<float>> out;
  out.reserve(rig.size());
  for (std::size_t v = 0; v < rig.size(); ++v) {
    out.push_back(kind == RendererKind::Surrogate
                      ? shade(lit[v], texture, rig.background)
                      : detail::shade_target(lit[v], texture, rig.views[v], rig.light_for(v),
                                             rig.background, settings));
  }
  return out;
}

}  // namespace advtex
