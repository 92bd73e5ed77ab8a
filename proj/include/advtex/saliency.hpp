#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "advtex/classifier.hpp"
#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/parallel.hpp"
#include "advtex/rasterizer.hpp"
#include "advtex/surrogate.hpp"
#include "advtex/target.hpp"

namespace advtex {

/// Binary per-texel mask, tex_height x tex_width x 1 with values 0/1.
using TexelMask = Image<std::uint8_t>;

struct SaliencyMap {
  std::vector<Image<float>> pixel_saliency;  // per view, raw max |dL/dpixel|
  Image<float> texel_saliency;               // accumulated, max-normalised to [0,1]
  double threshold = 0.0;
  TexelMask mask;
};

/// Per pixel: max over color channels of |dL/dpixel| on a target-rendered
/// view. Not normalised.
inline Image<float> view_saliency(const ClassifierModel<float>& model, const Image<float>& target_image,
                                  int y) {
  const auto g = grad_input(model, target_image, y);
  Image<float> out(target_image.width(), target_image.height(), 1);
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = std::max({std::abs(g.gradient[p * 3]), std::abs(g.gradient[p * 3 + 1]),
                       std::abs(g.gradient[p * 3 + 2])});
  }
  return out;
}

/// Sums saliency * bilinear weight onto each covered pixel's footprint
/// texels, over all views in (view, pixel) order. Raw, not normalised.
inline Image<float> accumulate_texel_saliency(std::span<const Image<float>> pixel_saliency,
                                              std::span<const FragmentBuffer> fragments) {
  if (pixel_saliency.size() != fragments.size()) {
    fail(ErrorCode::RigMismatch, "saliency views and fragment buffers differ in count");
  }
  if (fragments.empty()) fail(ErrorCode::RigMismatch, "empty rig");
  const int tw = fragments.front().tex_width;
  const int th = fragments.front().tex_height;
  Image<double> accum(tw, th, 1);
  for (std::size_t v = 0; v < fragments.size(); ++v) {
    const FragmentBuffer& frags = fragments[v];
    const Image<float>& sal = pixel_saliency[v];
    if (sal.width() != frags.width || sal.height() != frags.height || sal.channels() != 1 ||
        frags.tex_width != tw || frags.tex_height != th) {
      fail(ErrorCode::ShapeMismatch, "saliency grid does not match its fragment buffer");
    }
    for (std::size_t p = 0; p < frags.pixels.size(); ++p) {
      const Fragment& f = frags.pixels[p];
      if (!f.covered()) continue;
      for (int k = 0; k < 4; ++k) accum[f.texel[k]] += static_cast<double>(sal[p]) * f.weight[k];
    }
  }
  return accum.cast<float>();
}

/// Divides by the maximum; an all-zero grid stays zero.
inline Image<float> normalize_max(Image<float> grid) {
  const float peak = grid.empty() ? 0.0f : *std::max_element(grid.data().begin(), grid.data().end());
  if (peak > 0.0f) {
    for (auto& v : grid.storage()) v = std::min(1.0f, v / peak);
  }
  return grid;
}

inline Image<float> splat_to_texels(std::span<const Image<float>> pixel_saliency,
                                    std::span<const FragmentBuffer> fragments) {
  return normalize_max(accumulate_texel_saliency(pixel_saliency, fragments));
}

inline TexelMask binarize(const Image<float>& texel_saliency, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorCode::InvalidArgument, "saliency threshold must lie in (0,1)");
  }
  TexelMask mask(texel_saliency.width(), texel_saliency.height(), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = texel_saliency[i] >= static_cast<float>(threshold) ? 1 : 0;
  }
  return mask;
}

inline std::size_t mask_count(const TexelMask& mask) {
  return static_cast<std::size_t>(std::count(mask.data().begin(), mask.data().end(), std::uint8_t{1}));
}

/// Texels reached by at least one covered pixel footprint with nonzero weight.
inline TexelMask reachable_texels(std::span<const FragmentBuffer> fragments) {
  const int tw = fragments.front().tex_width;
  const int th = fragments.front().tex_height;
  TexelMask out(tw, th, 1);
  for (const auto& frags : fragments) {
    for (const auto& f : frags.pixels) {
      if (!f.covered()) continue;
      for (int k = 0; k < 4; ++k) {
        if (f.weight[k] > 0.0f) out[f.texel[k]] = 1;
      }
    }
  }
  return out;
}

/// Target-renderer gradients, projected through surrogate fragments.
/// Computes the normalised texel map once; binarize() it for other thresholds.
inline SaliencyMap build_saliency_map(const Scene& scene, const ViewRig& rig,
                                      const ClassifierModel<float>& model,
                                      const TargetSettings& target, double threshold,
                                      int threads = 1) {
  SaliencyMap map;
  map.threshold = threshold;
  const std::vector<FragmentBuffer> fragments = rasterize_rig(scene, rig);
  const std::vector<Image<float>> target_views = render_rig(fragments, scene.texture, rig,
                                                            RendererKind::Target, target);
  map.pixel_saliency.resize(rig.size());
  parallel_for(rig.size(), threads, [&](std::size_t v) {
    map.pixel_saliency[v] = view_saliency(model, target_views[v], scene.label);
  });
  map.texel_saliency = splat_to_texels(map.pixel_saliency, fragments);
  map.mask = binarize(map.texel_saliency, threshold);
  return map;
}

}  // namespace advtex
