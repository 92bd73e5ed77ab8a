#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "advtex/errors.hpp"

namespace advtex {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// One triangle. Position, UV and normal indices are independent so seams
/// can share positions while splitting UVs (OBJ-style corners).
struct Face {
  std::array<int, 3> v{};
  std::array<int, 3> uv{};
  std::array<int, 3> n{};

  bool operator==(const Face&) const = default;
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Vec2> uvs;
  std::vector<Vec3> normals;
  std::vector<Face> faces;
};

inline constexpr double kMinTriangleArea = 1e-12;
inline constexpr double kNormalTolerance = 1e-5;

inline Vec3 face_cross(const Mesh& mesh, const Face& f) {
  const Vec3& a = mesh.vertices[f.v[0]];
  return (mesh.vertices[f.v[1]] - a).cross(mesh.vertices[f.v[2]] - a);
}

inline double triangle_area(const Mesh& mesh, const Face& f) {
  return 0.5 * face_cross(mesh, f).norm();
}

inline double surface_area(const Mesh& mesh) {
  double total = 0.0;
  for (const auto& f : mesh.faces) total += triangle_area(mesh, f);
  return total;
}

enum class MeshInvariant { VertexIndex, UVIndex, NormalIndex, UVRange, NormalLength, Degenerate };

constexpr std::string_view to_string(MeshInvariant inv) {
  switch (inv) {
    case MeshInvariant::VertexIndex: return "vertex-index";
    case MeshInvariant::UVIndex: return "uv-index";
    case MeshInvariant::NormalIndex: return "normal-index";
    case MeshInvariant::UVRange: return "uv-range";
    case MeshInvariant::NormalLength: return "normal-length";
    case MeshInvariant::Degenerate: return "degenerate-triangle";
  }
  return "unknown";
}

/// `element` is a face index for index/degeneracy violations, a UV index for
/// range violations and a normal index for length violations.
struct MeshViolation {
  MeshInvariant invariant;
  std::size_t element;

  std::string describe() const {
    return std::string(to_string(invariant)) + " at element " + std::to_string(element);
  }
};

inline std::vector<MeshViolation> validate_mesh(const Mesh& mesh) {
  std::vector<MeshViolation> out;
  auto in_range = [](int i, std::size_t n) { return i >= 0 && static_cast<std::size_t>(i) < n; };
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    bool vertices_ok = true;
    for (int k = 0; k < 3; ++k) {
      if (!in_range(f.v[k], mesh.vertices.size())) vertices_ok = false;
    }
    if (!vertices_ok) out.push_back({MeshInvariant::VertexIndex, fi});
    for (int k = 0; k < 3; ++k) {
      if (!in_range(f.uv[k], mesh.uvs.size())) {
        out.push_back({MeshInvariant::UVIndex, fi});
        break;
      }
    }
    for (int k = 0; k < 3; ++k) {
      if (!in_range(f.n[k], mesh.normals.size())) {
        out.push_back({MeshInvariant::NormalIndex, fi});
        break;
      }
    }
    if (vertices_ok && !(triangle_area(mesh, f) > kMinTriangleArea)) {
      out.push_back({MeshInvariant::Degenerate, fi});
    }
  }
  for (std::size_t i = 0; i < mesh.uvs.size(); ++i) {
    const Vec2& t = mesh.uvs[i];
    if (!(t.x() >= 0.0 && t.x() <= 1.0 && t.y() >= 0.0 && t.y() <= 1.0)) {
      out.push_back({MeshInvariant::UVRange, i});
    }
  }
  for (std::size_t i = 0; i < mesh.normals.size(); ++i) {
    if (!(std::abs(mesh.normals[i].norm() - 1.0) <= kNormalTolerance)) {
      out.push_back({MeshInvariant::NormalLength, i});
    }
  }
  return out;
}

/// Replaces the normals with one smooth normal per vertex: the area-weighted
/// mean of incident face normals (the unnormalised cross product already
/// carries twice the area).
inline Mesh compute_vertex_normals(const Mesh& mesh) {
  std::vector<Vec3> accum(mesh.vertices.size(), Vec3::Zero());
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& f : mesh.faces) {
    const Vec3 n = face_cross(mesh, f);
    for (int k = 0; k < 3; ++k) {
      accum[f.v[k]] += n;
      used[f.v[k]] = true;
    }
  }
  Mesh out = mesh;
  out.normals.resize(mesh.vertices.size());
  for (std::size_t i = 0; i < accum.size(); ++i) {
    if (!used[i]) {
      fail(ErrorCode::IsolatedVertex, "vertex " + std::to_string(i) + " belongs to no face");
    }
    const double len = accum[i].norm();
    if (!(len > 0.0)) {
      fail(ErrorCode::InvalidMesh, "vertex " + std::to_string(i) + " has cancelling face normals");
    }
    out.normals[i] = accum[i] / len;
  }
  for (auto& f : out.faces) f.n = f.v;
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_int(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

struct ObjCorner {
  int v = 0;
  int uv = 0;
  int n = 0;  // 0 when absent
};

}  // namespace detail

/// Parses the OBJ subset: `v`, `vt`, `vn`, `f a/b[/c] ...` (1-based) and `#`
/// comments. Any other directive is rejected. Polygons are fan-triangulated;
/// when any face lacks normals, smooth vertex normals are computed for all.
inline Mesh parse_obj(std::istream& in) {
  Mesh mesh;
  std::vector<std::vector<detail::ObjCorner>> polygons;
  std::vector<std::size_t> polygon_lines;
  bool all_have_normals = true;
  std::string raw;
  std::size_t line_no = 0;

  auto malformed = [&](const std::string& content) {
    fail(ErrorCode::MalformedLine,
         "line " + std::to_string(line_no) + ": '" + content + "'");
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tokens = detail::split_ws(line);
    const std::string_view key = tokens.front();
    if (key == "v" || key == "vn") {
      if (tokens.size() != 4) malformed(raw);
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        if (!detail::parse_double(tokens[k + 1], p[k])) malformed(raw);
      }
      if (key == "v") {
        mesh.vertices.push_back(p);
      } else {
        const double len = p.norm();
        if (!(len > 0.0)) malformed(raw);
        mesh.normals.push_back(p / len);
      }
    } else if (key == "vt") {
      if (tokens.size() != 3) malformed(raw);
      Vec2 t;
      for (int k = 0; k < 2; ++k) {
        if (!detail::parse_double(tokens[k + 1], t[k])) malformed(raw);
      }
      mesh.uvs.push_back(t);
    } else if (key == "f") {
      if (tokens.size() < 4) malformed(raw);
      std::vector<detail::ObjCorner> poly;
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        const std::string_view tok = tokens[k];
        std::array<std::string_view, 3> parts{};
        int count = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= tok.size(); ++i) {
          if (i == tok.size() || tok[i] == '/') {
            if (count == 3) malformed(raw);
            parts[count++] = tok.substr(start, i - start);
            start = i + 1;
          }
        }
        detail::ObjCorner c;
        if (!detail::parse_int(parts[0], c.v)) malformed(raw);
        if (count < 2 || parts[1].empty()) {
          fail(ErrorCode::MissingUV, "line " + std::to_string(line_no) +
                                         ": face corner without UV index: '" + raw + "'");
        }
        if (!detail::parse_int(parts[1], c.uv)) malformed(raw);
        if (count == 3) {
          if (!detail::parse_int(parts[2], c.n)) malformed(raw);
        } else {
          all_have_normals = false;
        }
        poly.push_back(c);
      }
      polygons.push_back(std::move(poly));
      polygon_lines.push_back(line_no);
    } else {
      malformed(raw);
    }
  }

  auto check = [](int idx, std::size_t n, std::size_t line, const char* what) {
    if (idx < 1 || static_cast<std::size_t>(idx) > n) {
      fail(ErrorCode::IndexOutOfRange, "line " + std::to_string(line) + ": " + what +
                                           " index " + std::to_string(idx) + " out of range 1.." +
                                           std::to_string(n));
    }
  };
  for (std::size_t p = 0; p < polygons.size(); ++p) {
    const auto& poly = polygons[p];
    for (const auto& c : poly) {
      check(c.v, mesh.vertices.size(), polygon_lines[p], "vertex");
      check(c.uv, mesh.uvs.size(), polygon_lines[p], "uv");
      if (all_have_normals) check(c.n, mesh.normals.size(), polygon_lines[p], "normal");
    }
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
      Face f;
      const std::array<const detail::ObjCorner*, 3> corners{&poly[0], &poly[k], &poly[k + 1]};
      for (int j = 0; j < 3; ++j) {
        f.v[j] = corners[j]->v - 1;
        f.uv[j] = corners[j]->uv - 1;
        f.n[j] = all_have_normals ? corners[j]->n - 1 : 0;
      }
      mesh.faces.push_back(f);
    }
  }

  if (!all_have_normals) {
    mesh.normals.clear();
    mesh = compute_vertex_normals(mesh);
  }
  const auto violations = validate_mesh(mesh);
  if (!violations.empty()) {
    fail(ErrorCode::InvalidMesh, "mesh violates invariant: " + violations.front().describe());
  }
  return mesh;
}

inline Mesh parse_obj(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_obj(in);
}

/// Writes the same OBJ subset back, floats with 9 significant digits.
inline std::string serialize_obj(const Mesh& mesh) {
  std::string out;
  char buf[128];
  for (const auto& p : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out += buf;
  }
  for (const auto& t : mesh.uvs) {
    std::snprintf(buf, sizeof buf, "vt %.9g %.9g\n", t.x(), t.y());
    out += buf;
  }
  for (const auto& n : mesh.normals) {
    std::snprintf(buf, sizeof buf, "vn %.9g %.9g %.9g\n", n.x(), n.y(), n.z());
    out += buf;
  }
  for (const auto& f : mesh.faces) {
    std::snprintf(buf, sizeof buf, "f %d/%d/%d %d/%d/%d %d/%d/%d\n", f.v[0] + 1, f.uv[0] + 1,
                  f.n[0] + 1, f.v[1] + 1, f.uv[1] + 1, f.n[1] + 1, f.v[2] + 1, f.uv[2] + 1,
                  f.n[2] + 1);
    out += buf;
  }
  return out;
}

}  // namespace advtex
