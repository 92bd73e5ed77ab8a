#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "advtex/errors.hpp"
#include "advtex/image.hpp"
#include "advtex/mesh.hpp"
#include "advtex/scene.hpp"
#include "advtex/surrogate.hpp"
#include "advtex/target.hpp"

namespace advtex {

/// A scene file: attacker-visible scene plus the target renderer's settings,
/// kept in its own section.
struct SceneDocument {
  SceneConfig scene;
  TargetSettings target;
};

namespace detail {

using nlohmann::json;

inline void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) fail(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + where);
  }
}

template <typename V>
void read_opt(const json& j, const char* key, V& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception&) {
    fail(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "' in " + where);
  }
}

}  // namespace detail

/// Fail-closed parse: unknown keys and ill-typed values are errors. Relative
/// paths resolve against `base_dir`.
inline SceneDocument parse_scene_document(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::read_opt;
  using detail::require_keys;
  require_keys(j, {"object", "rig", "lights", "background", "target_renderer"}, "scene");
  SceneDocument doc;
  SceneConfig& cfg = doc.scene;
  if (!j.contains("object")) fail(ErrorCode::InvalidConfig, "scene needs an 'object' section");
  const auto& obj = j.at("object");
  require_keys(obj, {"id", "label", "mesh", "texture"}, "object");
  for (const char* k : {"id", "label", "mesh", "texture"}) {
    if (!obj.contains(k)) fail(ErrorCode::InvalidConfig, std::string("object needs '") + k + "'");
  }
  read_opt(obj, "id", cfg.object_id, "object");
  read_opt(obj, "label", cfg.label, "object");
  std::string mesh, texture;
  read_opt(obj, "mesh", mesh, "object");
  read_opt(obj, "texture", texture, "object");
  cfg.mesh_path = base_dir / mesh;
  cfg.texture_path = base_dir / texture;

  if (j.contains("rig")) {
    const auto& r = j.at("rig");
    require_keys(r, {"n_views", "distance", "elevation_min", "elevation_max", "elevation_levels", "fov_y",
                     "resolution"},
                 "rig");
    read_opt(r, "n_views", cfg.rig.n_views, "rig");
    read_opt(r, "distance", cfg.rig.distance, "rig");
    read_opt(r, "elevation_min", cfg.rig.elevation_min, "rig");
    read_opt(r, "elevation_max", cfg.rig.elevation_max, "rig");
    read_opt(r, "elevation_levels", cfg.rig.elevation_levels, "rig");
    read_opt(r, "fov_y", cfg.rig.fov_y, "rig");
    if (r.contains("resolution")) {
      std::array<int, 2> res{};
      read_opt(r, "resolution", res, "rig");
      cfg.rig.width = res[0];
      cfg.rig.height = res[1];
    }
  }
  if (j.contains("lights")) {
    if (!j.at("lights").is_array()) fail(ErrorCode::InvalidConfig, "'lights' must be a list");
    cfg.lights.clear();
    for (const auto& l : j.at("lights")) {
      require_keys(l, {"azimuth", "elevation", "diffuse_strength", "ambient_strength"}, "light");
      DirectionalLight light;
      read_opt(l, "azimuth", light.azimuth, "light");
      read_opt(l, "elevation", light.elevation, "light");
      read_opt(l, "diffuse_strength", light.diffuse_strength, "light");
      read_opt(l, "ambient_strength", light.ambient_strength, "light");
      cfg.lights.push_back(light);
    }
  }
  if (j.contains("background")) {
    const auto& bg = j.at("background");
    if (bg.is_string() && bg.get<std::string>() == "auto") {
      cfg.background.reset();
    } else {
      Rgb c{};
      read_opt(j, "background", c, "scene");
      cfg.background = c;
    }
  }
  if (j.contains("target_renderer")) {
    const auto& t = j.at("target_renderer");
    require_keys(t, {"spec_strength", "shininess", "gamma"}, "target_renderer");
    read_opt(t, "spec_strength", doc.target.spec_strength, "target_renderer");
    read_opt(t, "shininess", doc.target.shininess, "target_renderer");
    read_opt(t, "gamma", doc.target.gamma, "target_renderer");
  }
  validate_scene_config(cfg);
  validate_target_settings(doc.target);
  return doc;
}

inline SceneDocument load_scene_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidConfig, "cannot read scene config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, "scene config is not valid JSON: " + path.string());
  }
  return parse_scene_document(j, path.parent_path());
}

/// Mesh and texture paths are written relative to `base_dir`.
inline nlohmann::json scene_document_json(const SceneDocument& doc, const std::filesystem::path& base_dir) {
  const SceneConfig& c = doc.scene;
  nlohmann::json j;
  j["object"] = {{"id", c.object_id},
                 {"label", c.label},
                 {"mesh", c.mesh_path.lexically_relative(base_dir).generic_string()},
                 {"texture", c.texture_path.lexically_relative(base_dir).generic_string()}};
  j["rig"] = {{"n_views", c.rig.n_views},
              {"distance", c.rig.distance},
              {"elevation_min", c.rig.elevation_min},
              {"elevation_max", c.rig.elevation_max},
              {"elevation_levels", c.rig.elevation_levels},
              {"fov_y", c.rig.fov_y},
              {"resolution", {c.rig.width, c.rig.height}}};
  j["lights"] = nlohmann::json::array();
  for (const auto& l : c.lights) {
    j["lights"].push_back({{"azimuth", l.azimuth},
                           {"elevation", l.elevation},
                           {"diffuse_strength", l.diffuse_strength},
                           {"ambient_strength", l.ambient_strength}});
  }
  if (c.background) {
    j["background"] = *c.background;
  } else {
    j["background"] = "auto";
  }
  j["target_renderer"] = {{"spec_strength", doc.target.spec_strength},
                          {"shininess", doc.target.shininess},
                          {"gamma", doc.target.gamma}};
  return j;
}

inline Mesh load_obj_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read mesh: " + path.string());
  return parse_obj(in);
}

inline Scene load_scene(const SceneConfig& cfg) {
  Scene scene;
  scene.object_id = cfg.object_id;
  scene.label = cfg.label;
  scene.mesh = load_obj_file(cfg.mesh_path);
  scene.texture = load_png_rgb(cfg.texture_path);
  if (!is_valid_texture(scene.texture)) {
    fail(ErrorCode::InvalidConfig, "texture must be RGB and at least 4x4: " + cfg.texture_path.string());
  }
  return scene;
}

}  // namespace advtex
