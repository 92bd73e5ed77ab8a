#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/mesh.hpp"

namespace advtex {

enum class PrimitiveKind { Cube, UVSphere, Torus, Cylinder, Cone };

inline std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Cube: return "cube";
    case PrimitiveKind::UVSphere: return "uv-sphere";
    case PrimitiveKind::Torus: return "torus";
    case PrimitiveKind::Cylinder: return "cylinder";
    case PrimitiveKind::Cone: return "cone";
  }
  return "unknown";
}

inline PrimitiveKind parse_primitive_kind(std::string_view name) {
  if (name == "cube") return PrimitiveKind::Cube;
  if (name == "uv-sphere") return PrimitiveKind::UVSphere;
  if (name == "torus") return PrimitiveKind::Torus;
  if (name == "cylinder") return PrimitiveKind::Cylinder;
  if (name == "cone") return PrimitiveKind::Cone;
  fail(ErrorCode::UnsupportedKind, "unsupported primitive kind: " + std::string(name));
}

enum class PatternKind { Checker, Stripes, Noise };

/// Procedural base texture. `count` is cells per side (checker), stripes
/// across the width, or lattice cells per side (value noise).
struct PatternSpec {
  PatternKind kind = PatternKind::Checker;
  int count = 8;
  int size = 64;
  std::array<std::uint8_t, 3> color_a{230, 230, 230};
  std::array<std::uint8_t, 3> color_b{40, 40, 40};
  std::uint64_t seed = 0;
};

/// Parses "checker-8", "stripes-4" or "noise-6"; colors and size keep defaults.
inline PatternSpec parse_pattern(std::string_view text) {
  const auto dash = text.rfind('-');
  PatternSpec spec;
  if (dash == std::string_view::npos) {
    fail(ErrorCode::InvalidArgument, "pattern must look like kind-count: " + std::string(text));
  }
  const std::string_view kind = text.substr(0, dash);
  if (kind == "checker") {
    spec.kind = PatternKind::Checker;
  } else if (kind == "stripes") {
    spec.kind = PatternKind::Stripes;
  } else if (kind == "noise") {
    spec.kind = PatternKind::Noise;
  } else {
    fail(ErrorCode::InvalidArgument, "unknown pattern kind: " + std::string(kind));
  }
  if (!detail::parse_int(text.substr(dash + 1), spec.count) || spec.count < 1) {
    fail(ErrorCode::InvalidArgument, "pattern count must be a positive integer: " + std::string(text));
  }
  return spec;
}

/// Texel values are always multiples of 1/255 so a PNG round trip is exact.
inline Texture<float> make_pattern_texture(const PatternSpec& spec) {
  if (spec.size < 4) fail(ErrorCode::InvalidArgument, "texture size must be at least 4");
  const int n = spec.size;
  Texture<float> tex(n, n, 3);
  auto mix = [&](double s, int c) {
    const double a = spec.color_a[c];
    const double b = spec.color_b[c];
    return from_byte(static_cast<std::uint8_t>(std::lround(a + s * (b - a))));
  };

  std::vector<double> lattice;
  const int cells = spec.count;
  if (spec.kind == PatternKind::Noise) {
    std::mt19937_64 rng(spec.seed);
    lattice.resize(static_cast<std::size_t>(cells + 1) * (cells + 1));
    for (auto& v : lattice) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double s = 0.0;
      switch (spec.kind) {
        case PatternKind::Checker:
          s = ((x * cells / n) + (y * cells / n)) % 2;
          break;
        case PatternKind::Stripes:
          s = (x * cells / n) % 2;
          break;
        case PatternKind::Noise: {
          const double gx = (x + 0.5) * cells / n;
          const double gy = (y + 0.5) * cells / n;
          const int ix = std::min(static_cast<int>(gx), cells - 1);
          const int iy = std::min(static_cast<int>(gy), cells - 1);
          const double fx = gx - ix;
          const double fy = gy - iy;
          auto at = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * (cells + 1) + i]; };
          const double top = at(ix, iy) * (1 - fx) + at(ix + 1, iy) * fx;
          const double bottom = at(ix, iy + 1) * (1 - fx) + at(ix + 1, iy + 1) * fx;
          s = top * (1 - fy) + bottom * fy;
          break;
        }
      }
      for (int c = 0; c < 3; ++c) tex(x, y, c) = mix(s, c);
    }
  }
  return tex;
}

namespace detail {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline int add_uv(Mesh& m, double u, double v) {
  m.uvs.emplace_back(u, v);
  return static_cast<int>(m.uvs.size()) - 1;
}

inline void add_face(Mesh& m, std::array<int, 3> v, std::array<int, 3> uv, std::array<int, 3> n) {
  m.faces.push_back(Face{v, uv, n});
}

// Six faces on a shared integer lattice so edges are watertight. Each quad is
// split along the diagonal joining its even-parity lattice corners, which
// gives every cube corner equal area weight from its three faces.
inline Mesh make_cube(int res, double side) {
  struct FaceFrame {
    Vec3 normal, u, v;
  };
  const std::array<FaceFrame, 6> frames{{
      {{1, 0, 0}, {0, 0, -1}, {0, 1, 0}},
      {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},
      {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}},
      {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},
      {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},
      {{0, 0, -1}, {-1, 0, 0}, {0, 1, 0}},
  }};
  Mesh m;
  std::map<std::array<int, 3>, int> lattice_index;
  auto vertex_at = [&](const Vec3& unit_pos) {
    std::array<int, 3> key;
    for (int k = 0; k < 3; ++k) key[k] = static_cast<int>(std::lround((unit_pos[k] + 0.5) * res));
    auto [it, inserted] = lattice_index.try_emplace(key, static_cast<int>(m.vertices.size()));
    if (inserted) {
      Vec3 p;
      for (int k = 0; k < 3; ++k) p[k] = (static_cast<double>(key[k]) / res - 0.5) * side;
      m.vertices.push_back(p);
    }
    return std::pair{it->second, (key[0] + key[1] + key[2]) % 2 == 0};
  };

  constexpr double inset = 0.02;
  for (int fi = 0; fi < 6; ++fi) {
    const FaceFrame& fr = frames[fi];
    m.normals.push_back(fr.normal);
    const int normal = fi;
    const double cell_u0 = (fi % 3) / 3.0;
    const double cell_v0 = (fi / 3) / 2.0;
    std::vector<int> vid((res + 1) * (res + 1));
    std::vector<int> uid((res + 1) * (res + 1));
    std::vector<bool> even((res + 1) * (res + 1));
    for (int b = 0; b <= res; ++b) {
      for (int a = 0; a <= res; ++a) {
        const double s = static_cast<double>(a) / res;
        const double t = static_cast<double>(b) / res;
        const Vec3 p = 0.5 * fr.normal + (s - 0.5) * fr.u + (t - 0.5) * fr.v;
        auto [id, is_even] = vertex_at(p);
        const int k = b * (res + 1) + a;
        vid[k] = id;
        even[k] = is_even;
        uid[k] = add_uv(m, cell_u0 + (inset + s * (1 - 2 * inset)) / 3.0,
                        cell_v0 + (inset + t * (1 - 2 * inset)) / 2.0);
      }
    }
    for (int b = 0; b < res; ++b) {
      for (int a = 0; a < res; ++a) {
        const int k00 = b * (res + 1) + a;
        const int k10 = k00 + 1;
        const int k01 = k00 + res + 1;
        const int k11 = k01 + 1;
        auto tri = [&](int i, int j, int k) {
          add_face(m, {vid[i], vid[j], vid[k]}, {uid[i], uid[j], uid[k]}, {normal, normal, normal});
        };
        if (even[k00]) {
          tri(k00, k10, k11);
          tri(k00, k11, k01);
        } else {
          tri(k00, k10, k01);
          tri(k10, k11, k01);
        }
      }
    }
  }
  return m;
}

// Latitude bands: res + 1 bands (two fan caps, res - 1 quad bands) so the
// triangle count is 2 * res^2 without any pole degeneracy.
inline Mesh make_uv_sphere(int res, double radius) {
  Mesh m;
  const int bands = res + 1;
  auto pos = [&](int ring, int col) {
    const double theta = std::numbers::pi * ring / bands;
    const double phi = kTwoPi * col / res;
    return Vec3(std::sin(theta) * std::sin(phi), std::cos(theta), std::sin(theta) * std::cos(phi));
  };
  m.vertices.push_back(Vec3(0, radius, 0));
  for (int i = 1; i <= res; ++i) {
    for (int j = 0; j < res; ++j) m.vertices.push_back(radius * pos(i, j));
  }
  m.vertices.push_back(Vec3(0, -radius, 0));
  for (const auto& p : m.vertices) m.normals.push_back(p.normalized());
  const int north = 0;
  const int south = static_cast<int>(m.vertices.size()) - 1;
  auto ring_vertex = [&](int i, int j) { return 1 + (i - 1) * res + (j % res); };

  std::vector<int> grid_uv((res + 1) * (bands + 1));
  for (int i = 0; i <= bands; ++i) {
    for (int j = 0; j <= res; ++j) {
      grid_uv[i * (res + 1) + j] = add_uv(m, static_cast<double>(j) / res, 1.0 - static_cast<double>(i) / bands);
    }
  }
  auto uv = [&](int i, int j) { return grid_uv[i * (res + 1) + j]; };
  for (int j = 0; j < res; ++j) {
    const int pole_uv = add_uv(m, (j + 0.5) / res, 1.0);
    const int a = ring_vertex(1, j), b = ring_vertex(1, j + 1);
    add_face(m, {north, a, b}, {pole_uv, uv(1, j), uv(1, j + 1)}, {north, a, b});
  }
  for (int i = 1; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      const int a = ring_vertex(i, j), c = ring_vertex(i, j + 1);
      const int b = ring_vertex(i + 1, j), d = ring_vertex(i + 1, j + 1);
      add_face(m, {a, b, c}, {uv(i, j), uv(i + 1, j), uv(i, j + 1)}, {a, b, c});
      add_face(m, {c, b, d}, {uv(i, j + 1), uv(i + 1, j), uv(i + 1, j + 1)}, {c, b, d});
    }
  }
  for (int j = 0; j < res; ++j) {
    const int pole_uv = add_uv(m, (j + 0.5) / res, 0.0);
    const int a = ring_vertex(res, j), c = ring_vertex(res, j + 1);
    add_face(m, {a, south, c}, {uv(res, j), pole_uv, uv(res, j + 1)}, {a, south, c});
  }
  return m;
}

inline Mesh make_torus(int res, double major, double minor) {
  Mesh m;
  for (int i = 0; i < res; ++i) {
    const double psi = kTwoPi * i / res;
    for (int j = 0; j < res; ++j) {
      const double phi = kTwoPi * j / res;
      const double ring = major + minor * std::cos(psi);
      m.vertices.emplace_back(ring * std::sin(phi), minor * std::sin(psi), ring * std::cos(phi));
      m.normals.emplace_back(std::cos(psi) * std::sin(phi), std::sin(psi), std::cos(psi) * std::cos(phi));
    }
  }
  std::vector<int> uvs((res + 1) * (res + 1));
  for (int i = 0; i <= res; ++i) {
    for (int j = 0; j <= res; ++j) {
      uvs[i * (res + 1) + j] = add_uv(m, static_cast<double>(j) / res, static_cast<double>(i) / res);
    }
  }
  auto vid = [&](int i, int j) { return (i % res) * res + (j % res); };
  auto uid = [&](int i, int j) { return uvs[i * (res + 1) + j]; };
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      const int a = vid(i, j), c = vid(i, j + 1), b = vid(i + 1, j), d = vid(i + 1, j + 1);
      add_face(m, {a, c, b}, {uid(i, j), uid(i, j + 1), uid(i + 1, j)}, {a, c, b});
      add_face(m, {c, d, b}, {uid(i, j + 1), uid(i + 1, j + 1), uid(i + 1, j)}, {c, d, b});
    }
  }
  return m;
}

// Shared by cylinder and cone: a disk cap fanned from its centre vertex,
// mapped to a disc in UV space.
inline void add_cap(Mesh& m, const std::vector<int>& ring, double y, bool up, Vec2 uv_center) {
  const int res = static_cast<int>(ring.size());
  constexpr double uv_radius = 0.23;
  m.vertices.emplace_back(0.0, y, 0.0);
  const int center = static_cast<int>(m.vertices.size()) - 1;
  m.normals.emplace_back(0.0, up ? 1.0 : -1.0, 0.0);
  const int normal = static_cast<int>(m.normals.size()) - 1;
  const int center_uv = add_uv(m, uv_center.x(), uv_center.y());
  std::vector<int> ring_uv(res + 1);
  for (int j = 0; j <= res; ++j) {
    const double phi = kTwoPi * j / res;
    // Mirror the disc for the bottom cap so it is not seen flipped.
    const double du = uv_radius * std::sin(phi);
    const double dv = uv_radius * std::cos(phi) * (up ? 1.0 : -1.0);
    ring_uv[j] = add_uv(m, uv_center.x() + du, uv_center.y() + dv);
  }
  for (int j = 0; j < res; ++j) {
    const int a = ring[j], b = ring[(j + 1) % res];
    if (up) {
      add_face(m, {center, a, b}, {center_uv, ring_uv[j], ring_uv[j + 1]}, {normal, normal, normal});
    } else {
      add_face(m, {center, b, a}, {center_uv, ring_uv[j + 1], ring_uv[j]}, {normal, normal, normal});
    }
  }
}

inline Mesh make_cylinder(int res, double radius, double height) {
  Mesh m;
  const int rows = std::max(1, res / 4);
  for (int k = 0; k <= rows; ++k) {
    const double y = height / 2 - height * k / rows;
    for (int j = 0; j < res; ++j) {
      const double phi = kTwoPi * j / res;
      m.vertices.emplace_back(radius * std::sin(phi), y, radius * std::cos(phi));
    }
  }
  for (int j = 0; j < res; ++j) {
    const double phi = kTwoPi * j / res;
    m.normals.emplace_back(std::sin(phi), 0.0, std::cos(phi));
  }
  std::vector<int> uvs((rows + 1) * (res + 1));
  for (int k = 0; k <= rows; ++k) {
    for (int j = 0; j <= res; ++j) {
      uvs[k * (res + 1) + j] = add_uv(m, static_cast<double>(j) / res, 1.0 - 0.5 * k / rows);
    }
  }
  auto vid = [&](int k, int j) { return k * res + (j % res); };
  auto uid = [&](int k, int j) { return uvs[k * (res + 1) + j]; };
  for (int k = 0; k < rows; ++k) {
    for (int j = 0; j < res; ++j) {
      const int a = vid(k, j), c = vid(k, j + 1), b = vid(k + 1, j), d = vid(k + 1, j + 1);
      const int na = j, nc = (j + 1) % res;
      add_face(m, {a, b, c}, {uid(k, j), uid(k + 1, j), uid(k, j + 1)}, {na, na, nc});
      add_face(m, {c, b, d}, {uid(k, j + 1), uid(k + 1, j), uid(k + 1, j + 1)}, {nc, na, nc});
    }
  }
  std::vector<int> top(res), bottom(res);
  for (int j = 0; j < res; ++j) {
    top[j] = vid(0, j);
    bottom[j] = vid(rows, j);
  }
  add_cap(m, top, height / 2, true, Vec2(0.25, 0.25));
  add_cap(m, bottom, -height / 2, false, Vec2(0.75, 0.25));
  return m;
}

inline Mesh make_cone(int res, double radius, double height) {
  Mesh m;
  const int rows = std::max(1, res / 4);
  m.vertices.emplace_back(0.0, height / 2, 0.0);
  for (int k = 1; k <= rows; ++k) {
    const double r = radius * k / rows;
    const double y = height / 2 - height * k / rows;
    for (int j = 0; j < res; ++j) {
      const double phi = kTwoPi * j / res;
      m.vertices.emplace_back(r * std::sin(phi), y, r * std::cos(phi));
    }
  }
  auto side_normal = [&](double phi) {
    return Vec3(height * std::sin(phi), radius, height * std::cos(phi)).normalized();
  };
  for (int j = 0; j < res; ++j) m.normals.push_back(side_normal(kTwoPi * j / res));
  for (int j = 0; j < res; ++j) m.normals.push_back(side_normal(kTwoPi * (j + 0.5) / res));
  const int apex = 0;
  auto vid = [&](int k, int j) { return 1 + (k - 1) * res + (j % res); };
  std::vector<int> uvs((rows + 1) * (res + 1));
  for (int k = 0; k <= rows; ++k) {
    for (int j = 0; j <= res; ++j) {
      uvs[k * (res + 1) + j] = add_uv(m, static_cast<double>(j) / res, 1.0 - 0.5 * k / rows);
    }
  }
  auto uid = [&](int k, int j) { return uvs[k * (res + 1) + j]; };
  for (int j = 0; j < res; ++j) {
    const int apex_uv = add_uv(m, (j + 0.5) / res, 1.0);
    add_face(m, {apex, vid(1, j), vid(1, j + 1)}, {apex_uv, uid(1, j), uid(1, j + 1)},
             {res + j, j, (j + 1) % res});
  }
  for (int k = 1; k < rows; ++k) {
    for (int j = 0; j < res; ++j) {
      const int a = vid(k, j), c = vid(k, j + 1), b = vid(k + 1, j), d = vid(k + 1, j + 1);
      const int na = j, nc = (j + 1) % res;
      add_face(m, {a, b, c}, {uid(k, j), uid(k + 1, j), uid(k, j + 1)}, {na, na, nc});
      add_face(m, {c, b, d}, {uid(k, j + 1), uid(k + 1, j), uid(k + 1, j + 1)}, {nc, na, nc});
    }
  }
  std::vector<int> base(res);
  for (int j = 0; j < res; ++j) base[j] = vid(rows, j);
  add_cap(m, base, -height / 2, false, Vec2(0.5, 0.25));
  return m;
}

}  // namespace detail

/// Minimum resolution per kind: 1 for the cube (subdivisions per face), 3
/// for the revolved shapes (segments around the axis).
inline int min_resolution(PrimitiveKind kind) { return kind == PrimitiveKind::Cube ? 1 : 3; }

/// Watertight, outward-wound mesh sized to fit a sphere of radius ~1 around
/// the origin, plus its procedural base texture.
inline std::pair<Mesh, Texture<float>> generate_primitive(PrimitiveKind kind, int resolution,
                                                          const PatternSpec& pattern) {
  if (resolution < min_resolution(kind)) {
    fail(ErrorCode::InvalidArgument, std::string(to_string(kind)) + " needs resolution >= " +
                                         std::to_string(min_resolution(kind)));
  }
  Mesh mesh;
  switch (kind) {
    case PrimitiveKind::Cube: mesh = detail::make_cube(resolution, 1.2); break;
    case PrimitiveKind::UVSphere: mesh = detail::make_uv_sphere(resolution, 0.95); break;
    case PrimitiveKind::Torus: mesh = detail::make_torus(resolution, 0.7, 0.3); break;
    case PrimitiveKind::Cylinder: mesh = detail::make_cylinder(resolution, 0.65, 1.5); break;
    case PrimitiveKind::Cone: mesh = detail::make_cone(resolution, 0.85, 1.6); break;
  }
  return {std::move(mesh), make_pattern_texture(pattern)};
}

inline std::pair<Mesh, Texture<float>> generate_primitive(std::string_view kind, int resolution,
                                                          std::string_view pattern) {
  return generate_primitive(parse_primitive_kind(kind), resolution, parse_pattern(pattern));
}

}  // namespace advtex
