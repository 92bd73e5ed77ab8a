#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "advtex/classifier.hpp"
#include "advtex/config.hpp"
#include "advtex/primitives.hpp"
#include "advtex/surrogate.hpp"
#include "advtex/target.hpp"

namespace advtex {

/// One object of the procedural desk corpus; its index is its class label.
struct CorpusEntry {
  std::string id;
  PrimitiveKind kind;
  int resolution;
  PatternSpec pattern;
  double elevation_min;
  double elevation_max;
};

inline constexpr int kMaxCorpusObjects = 10;

/// The first `count` corpus objects. `seed` only feeds the noise textures.
inline std::vector<CorpusEntry> desk_corpus(int count, std::uint64_t seed = 0) {
  if (count < 1 || count > kMaxCorpusObjects) {
    fail(ErrorCode::InvalidArgument, "corpus size must lie in [1, " + std::to_string(kMaxCorpusObjects) + "]");
  }
  using C = std::array<std::uint8_t, 3>;
  auto pattern = [&](PatternKind kind, int n, C a, C b, std::uint64_t salt) {
    PatternSpec p;
    p.kind = kind;
    p.count = n;
    p.color_a = a;
    p.color_b = b;
    p.seed = seed * 1000003ull + salt;
    return p;
  };
  // Five shapes, two hue variants each: the variants of a pair differ only in
  // the primary color, so every class has a near neighbour.
  const std::vector<CorpusEntry> all{
      {"cube_checker_red", PrimitiveKind::Cube, 2, pattern(PatternKind::Checker, 8, {210, 50, 50}, {235, 235, 235}, 1), 0, 40},
      {"cube_checker_orange", PrimitiveKind::Cube, 2, pattern(PatternKind::Checker, 8, {215, 90, 45}, {235, 235, 235}, 2), 0, 40},
      {"sphere_stripes_blue", PrimitiveKind::UVSphere, 16, pattern(PatternKind::Stripes, 8, {50, 80, 210}, {235, 215, 70}, 3), -10, 30},
      {"sphere_stripes_teal", PrimitiveKind::UVSphere, 16, pattern(PatternKind::Stripes, 8, {45, 115, 190}, {235, 215, 70}, 4), -10, 30},
      {"torus_checker_green", PrimitiveKind::Torus, 24, pattern(PatternKind::Checker, 6, {50, 170, 60}, {25, 25, 25}, 5), 10, 50},
      {"torus_checker_lime", PrimitiveKind::Torus, 24, pattern(PatternKind::Checker, 6, {95, 180, 45}, {25, 25, 25}, 6), 10, 50},
      {"cylinder_stripes_purple", PrimitiveKind::Cylinder, 24, pattern(PatternKind::Stripes, 6, {120, 50, 160}, {235, 150, 40}, 7), 0, 30},
      {"cylinder_stripes_magenta", PrimitiveKind::Cylinder, 24, pattern(PatternKind::Stripes, 6, {155, 45, 140}, {235, 150, 40}, 8), 0, 30},
      {"cone_noise_brown", PrimitiveKind::Cone, 24, pattern(PatternKind::Noise, 5, {100, 65, 35}, {225, 205, 145}, 9), 0, 30},
      {"cone_noise_olive", PrimitiveKind::Cone, 24, pattern(PatternKind::Noise, 5, {95, 100, 35}, {225, 205, 145}, 10), 0, 30},
  };
  return {all.begin(), all.begin() + count};
}

inline SceneDocument corpus_scene_document(const CorpusEntry& entry, int label,
                                           const std::filesystem::path& dir) {
  SceneDocument doc;
  doc.scene.object_id = entry.id;
  doc.scene.label = label;
  doc.scene.mesh_path = dir / (entry.id + ".obj");
  doc.scene.texture_path = dir / (entry.id + ".png");
  doc.scene.rig.elevation_min = entry.elevation_min;
  doc.scene.rig.elevation_max = entry.elevation_max;
  doc.scene.background.reset();
  return doc;
}

/// In-memory scene for a corpus entry. The mesh goes through the OBJ text
/// form so it carries the same bits as the file gen-corpus writes.
inline Scene make_corpus_scene(const CorpusEntry& entry, int label) {
  auto [mesh, texture] = generate_primitive(entry.kind, entry.resolution, entry.pattern);
  return Scene{entry.id, label, parse_obj(serialize_obj(mesh)), std::move(texture)};
}

/// Clean training views: every rig view under both renderers and both
/// backgrounds, tagged with the renderer that produced it.
inline std::vector<LabeledView> training_views(const Scene& scene, ViewRig rig, const TargetSettings& target) {
  std::vector<LabeledView> out;
  const auto fragments = rasterize_rig(scene, rig);
  for (const Rgb& bg : {kBlack, kWhite}) {
    rig.background = bg;
    for (RendererKind kind : {RendererKind::Surrogate, RendererKind::Target}) {
      auto images = render_rig(fragments, scene.texture, rig, kind, target);
      for (std::size_t v = 0; v < images.size(); ++v) {
        out.push_back({std::move(images[v]), scene.label, static_cast<int>(v),
                       kind == RendererKind::Surrogate ? RendererTag::Surrogate : RendererTag::Target});
      }
    }
  }
  return out;
}

}  // namespace advtex
