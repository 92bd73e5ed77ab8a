#pragma once

#include <string>
#include <vector>

#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/mesh.hpp"
#include "advtex/rasterizer.hpp"
#include "advtex/scene.hpp"

namespace advtex {

/// The object under attack: geometry is fixed, the texture is the variable.
struct Scene {
  std::string object_id;
  int label = 0;
  Mesh mesh;
  Texture<float> texture;
};

template <typename T>
struct RenderedView {
  Image<T> image;
  FragmentBuffer fragments;
  std::size_t camera_id = 0;
};

/// Bilinear texture lookup at a fragment's footprint, one channel.
template <typename T>
T sample_texture(const Texture<T>& tex, const Fragment& frag, int c) {
  T acc{0};
  for (int k = 0; k < 4; ++k) {
    acc += static_cast<T>(frag.weight[k]) * tex[static_cast<std::size_t>(frag.texel[k]) * 3 + c];
  }
  return acc;
}

/// Diffuse shading with the fragments' stored shading scalars: covered pixels
/// get sample * shading, uncovered ones the background. Linear in the texture.
template <typename T>
Image<T> shade(const FragmentBuffer& frags, const Texture<T>& tex, const Rgb& background) {
  if (tex.channels() != 3 || tex.width() != frags.tex_width || tex.height() != frags.tex_height) {
    fail(ErrorCode::ShapeMismatch, "texture does not match the fragment buffer's footprint grid");
  }
  Image<T> img(frags.width, frags.height, 3);
  for (std::size_t p = 0; p < frags.pixels.size(); ++p) {
    const Fragment& frag = frags.pixels[p];
    for (int c = 0; c < 3; ++c) {
      img[p * 3 + c] = frag.covered()
                           ? sample_texture(tex, frag, c) * static_cast<T>(frag.shading)
                           : static_cast<T>(background[c]);
    }
  }
  return img;
}

template <typename T>
Image<T> shade(const FragmentBuffer& frags, const Texture<T>& tex, const DirectionalLight& light,
               const Rgb& background) {
  return shade(light_fragments(frags, light), tex, background);
}

/// Lit fragment buffers for every rig view (texture-independent, so reusable
/// across attack iterations).
inline std::vector<FragmentBuffer> rasterize_rig(const Scene& scene, const ViewRig& rig) {
  std::vector<FragmentBuffer> out;
  out.reserve(rig.size());
  for (std::size_t v = 0; v < rig.size(); ++v) {
    out.push_back(light_fragments(
        rasterize(scene.mesh, rig.views[v], scene.texture.width(), scene.texture.height()),
        rig.light_for(v)));
  }
  return out;
}

template <typename T = float>
RenderedView<T> render_surrogate(const Mesh& mesh, const Texture<T>& tex, const Camera& camera,
                                 const DirectionalLight& light, const Rgb& background,
                                 std::size_t camera_id = 0) {
  RenderedView<T> view;
  view.fragments = light_fragments(rasterize(mesh, camera, tex.width(), tex.height()), light);
  view.image = shade(view.fragments, tex, background);
  view.camera_id = camera_id;
  return view;
}

inline RenderedView<float> render_surrogate(const Scene& scene, const ViewRig& rig, std::size_t view) {
  return render_surrogate(scene.mesh, scene.texture, rig.views[view], rig.light_for(view),
                          rig.background, view);
}

/// Same as backprop_texture but adds into an existing gradient.
template <typename T>
void backprop_texture_accumulate(const FragmentBuffer& frags, const Image<T>& image_gradient,
                                 Texture<T>& grad) {
  for (std::size_t p = 0; p < frags.pixels.size(); ++p) {
    const Fragment& frag = frags.pixels[p];
    if (!frag.covered()) continue;
    const T s = static_cast<T>(frag.shading);
    for (int k = 0; k < 4; ++k) {
      const T w = static_cast<T>(frag.weight[k]) * s;
      if (w == T{0}) continue;
      const std::size_t t = static_cast<std::size_t>(frag.texel[k]) * 3;
      for (int c = 0; c < 3; ++c) grad[t + c] += w * image_gradient[p * 3 + c];
    }
  }
}


/// Exact gradient of an image-space loss with respect to the texture: each
/// covered pixel's gradient goes to its four footprint texels scaled by
/// weight * shading, accumulated in pixel-scan order.
template <typename T>
Texture<T> backprop_texture(const FragmentBuffer& frags, const Image<T>& image_gradient) {
  if (image_gradient.width() != frags.width || image_gradient.height() != frags.height ||
      image_gradient.channels() != 3) {
    fail(ErrorCode::ShapeMismatch, "image gradient does not match the fragment buffer");
  }
  Texture<T> grad(frags.tex_width, frags.tex_height, 3);
  backprop_texture_accumulate(frags, image_gradient, grad);
  return grad;
}

}  // namespace advtex
