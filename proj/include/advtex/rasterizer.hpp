#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "advtex/mesh.hpp"
#include "advtex/scene.hpp"

namespace advtex {

/// Per-pixel rasterization record. Everything the texture gradient and the
/// saliency projection need is stored here, so neither has to re-rasterize.
struct Fragment {
  std::int32_t face = -1;  // -1: background
  std::array<float, 3> bary{};
  std::array<float, 3> normal{};
  std::array<float, 3> position{};  // world space
  float depth = 0.0f;
  std::array<std::int32_t, 4> texel{};  // y * tex_width + x
  std::array<float, 4> weight{};
  float shading = 1.0f;

  bool covered() const noexcept { return face >= 0; }
};

struct FragmentBuffer {
  int width = 0;
  int height = 0;
  int tex_width = 0;
  int tex_height = 0;
  std::vector<Fragment> pixels;

  const Fragment& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t covered_count() const {
    return static_cast<std::size_t>(
        std::count_if(pixels.begin(), pixels.end(), [](const Fragment& f) { return f.covered(); }));
  }
};

inline constexpr double kNearPlane = 1e-3;
inline constexpr double kEdgeTolerance = 1e-9;

/// Bilinear footprint of a UV coordinate with clamp-to-edge addressing.
/// v = 1 is the top texel row.
inline void texel_footprint(double u, double v, int tex_width, int tex_height,
                            std::array<std::int32_t, 4>& texel, std::array<float, 4>& weight) {
  const double x = u * tex_width - 0.5;
  const double y = (1.0 - v) * tex_height - 0.5;
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const double fx = x - fx0;
  const double fy = y - fy0;
  auto clamp_x = [&](double i) { return static_cast<std::int32_t>(std::clamp(i, 0.0, tex_width - 1.0)); };
  auto clamp_y = [&](double i) { return static_cast<std::int32_t>(std::clamp(i, 0.0, tex_height - 1.0)); };
  const std::int32_t x0 = clamp_x(fx0), x1 = clamp_x(fx0 + 1);
  const std::int32_t y0 = clamp_y(fy0), y1 = clamp_y(fy0 + 1);
  texel = {y0 * tex_width + x0, y0 * tex_width + x1, y1 * tex_width + x0, y1 * tex_width + x1};
  weight = {static_cast<float>((1 - fx) * (1 - fy)), static_cast<float>(fx * (1 - fy)),
            static_cast<float>((1 - fx) * fy), static_cast<float>(fx * fy)};
}

/// Z-buffered rasterization of front-facing triangles with perspective-correct
/// interpolation, sampled at pixel centres. Depth ties keep the lower face id.
/// The returned buffer is unlit (shading = 1); see light_fragments.
inline FragmentBuffer rasterize(const Mesh& mesh, const Camera& camera, int tex_width, int tex_height) {
  FragmentBuffer buf;
  buf.width = camera.width;
  buf.height = camera.height;
  buf.tex_width = tex_width;
  buf.tex_height = tex_height;
  buf.pixels.assign(static_cast<std::size_t>(camera.width) * camera.height, Fragment{});
  std::vector<double> zbuf(buf.pixels.size(), std::numeric_limits<double>::infinity());

  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& face = mesh.faces[fi];
    const Vec3& p0 = mesh.vertices[face.v[0]];
    if (face_cross(mesh, face).dot(camera.position - p0) <= 0.0) continue;  // back-facing

    std::array<ScreenPoint, 3> s;
    bool clipped = false;
    for (int k = 0; k < 3; ++k) {
      s[k] = camera.project(mesh.vertices[face.v[k]]);
      if (!(s[k].depth > kNearPlane)) clipped = true;
    }
    if (clipped) continue;

    auto edge = [](const ScreenPoint& a, const ScreenPoint& b, double px, double py) {
      return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
    };
    const double area = edge(s[0], s[1], s[2].x, s[2].y);
    if (std::abs(area) < 1e-12) continue;

    const double min_x = std::min({s[0].x, s[1].x, s[2].x});
    const double max_x = std::max({s[0].x, s[1].x, s[2].x});
    const double min_y = std::min({s[0].y, s[1].y, s[2].y});
    const double max_y = std::max({s[0].y, s[1].y, s[2].y});
    const int x_begin = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int x_end = std::min(camera.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    const int y_begin = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int y_end = std::min(camera.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));

    const std::array<double, 3> inv_depth{1.0 / s[0].depth, 1.0 / s[1].depth, 1.0 / s[2].depth};
    for (int py = y_begin; py <= y_end; ++py) {
      for (int px = x_begin; px <= x_end; ++px) {
        const double cx = px + 0.5;
        const double cy = py + 0.5;
        std::array<double, 3> b{edge(s[1], s[2], cx, cy) / area, edge(s[2], s[0], cx, cy) / area,
                                edge(s[0], s[1], cx, cy) / area};
        // Shared edges are evaluated from different reference vertices; the
        // tolerance keeps rounding from opening cracks along them.
        if (b[0] < -kEdgeTolerance || b[1] < -kEdgeTolerance || b[2] < -kEdgeTolerance) continue;
        for (auto& bi : b) bi = std::max(bi, 0.0);
        const double bsum = b[0] + b[1] + b[2];
        for (auto& bi : b) bi /= bsum;
        const double denom = b[0] * inv_depth[0] + b[1] * inv_depth[1] + b[2] * inv_depth[2];
        const double depth = 1.0 / denom;
        const std::size_t pix = static_cast<std::size_t>(py) * camera.width + px;
        if (!(depth < zbuf[pix])) continue;
        zbuf[pix] = depth;

        std::array<double, 3> w;
        for (int k = 0; k < 3; ++k) w[k] = b[k] * inv_depth[k] / denom;
        Vec2 uv = Vec2::Zero();
        Vec3 n = Vec3::Zero();
        Vec3 pos = Vec3::Zero();
        for (int k = 0; k < 3; ++k) {
          uv += w[k] * mesh.uvs[face.uv[k]];
          n += w[k] * mesh.normals[face.n[k]];
          pos += w[k] * mesh.vertices[face.v[k]];
        }
        const double len = n.norm();
        n = len > 0.0 ? Vec3(n / len) : face_cross(mesh, face).normalized();

        Fragment& frag = buf.pixels[pix];
        frag.face = static_cast<std::int32_t>(fi);
        for (int k = 0; k < 3; ++k) {
          frag.bary[k] = static_cast<float>(w[k]);
          frag.normal[k] = static_cast<float>(n[k]);
          frag.position[k] = static_cast<float>(pos[k]);
        }
        frag.depth = static_cast<float>(depth);
        texel_footprint(std::clamp(uv.x(), 0.0, 1.0), std::clamp(uv.y(), 0.0, 1.0), tex_width,
                        tex_height, frag.texel, frag.weight);
        frag.shading = 1.0f;
      }
    }
  }
  return buf;
}

inline float lambert_shading(const Fragment& frag, const Vec3& light_dir, const DirectionalLight& light) {
  const double ndotl = frag.normal[0] * light_dir.x() + frag.normal[1] * light_dir.y() +
                       frag.normal[2] * light_dir.z();
  const double s = light.ambient_strength + light.diffuse_strength * std::max(0.0, ndotl);
  return static_cast<float>(std::clamp(s, 0.0, 1.0));
}

/// Fills the per-pixel shading scalar ambient + diffuse * max(0, n.l).
inline FragmentBuffer light_fragments(FragmentBuffer buf, const DirectionalLight& light) {
  const Vec3 dir = light.direction();
  for (auto& frag : buf.pixels) {
    if (frag.covered()) frag.shading = lambert_shading(frag, dir, light);
  }
  return buf;
}

}  // namespace advtex
