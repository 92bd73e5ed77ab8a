#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "advtex/config.hpp"
#include "advtex/pipeline.hpp"

using namespace advtex;
namespace fs = std::filesystem;

namespace {

nlohmann::json minimal() {
  return nlohmann::json::parse(R"({"object": {"id": "cube", "label": 2, "mesh": "cube.obj", "texture": "cube.png"}})");
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::IoError;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(SceneDocument, DefaultsAndPathResolution) {
  const SceneDocument doc = parse_scene_document(minimal(), "/data/scenes");
  EXPECT_EQ(doc.scene.object_id, "cube");
  EXPECT_EQ(doc.scene.label, 2);
  EXPECT_EQ(doc.scene.mesh_path, fs::path("/data/scenes/cube.obj"));
  EXPECT_EQ(doc.scene.rig.n_views, 60);
  EXPECT_FALSE(doc.scene.background.has_value());
  EXPECT_DOUBLE_EQ(doc.target.spec_strength, 0.3);
}

TEST(SceneDocument, FailsClosed) {
  auto j = minimal();
  j["colour"] = 1;
  EXPECT_EQ(code_of([&] { parse_scene_document(j, "."); }), ErrorCode::InvalidConfig);
  j = minimal();
  j["rig"] = {{"n_view", 10}};
  EXPECT_EQ(code_of([&] { parse_scene_document(j, "."); }), ErrorCode::InvalidConfig);
  j = minimal();
  j["rig"] = {{"n_views", "ten"}};
  EXPECT_EQ(code_of([&] { parse_scene_document(j, "."); }), ErrorCode::InvalidConfig);
  j = minimal();
  j["object"].erase("texture");
  EXPECT_EQ(code_of([&] { parse_scene_document(j, "."); }), ErrorCode::InvalidConfig);
  j = minimal();
  j["target_renderer"] = {{"spec_strength", 2.0}};
  EXPECT_EQ(code_of([&] { parse_scene_document(j, "."); }), ErrorCode::InvalidConfig);
  j = minimal();
  j["lights"] = {{{"azimuth", 0}, {"diffuse_strength", 0.9}, {"ambient_strength", 0.5}}};
  EXPECT_EQ(code_of([&] { parse_scene_document(j, "."); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([] { load_scene_document("/nonexistent/scene.json"); }), ErrorCode::InvalidConfig);
}

TEST(SceneDocument, BackgroundAutoOrExplicit) {
  auto j = minimal();
  j["background"] = "auto";
  EXPECT_FALSE(parse_scene_document(j, ".").scene.background.has_value());
  j["background"] = {1.0, 1.0, 1.0};
  EXPECT_EQ(*parse_scene_document(j, ".").scene.background, kWhite);
  j["background"] = "grey";
  EXPECT_EQ(code_of([&] { parse_scene_document(j, "."); }), ErrorCode::InvalidConfig);
}

TEST(SceneDocument, JsonRoundTrip) {
  auto j = minimal();
  j["rig"] = {{"n_views", 12}, {"elevation_min", -10}, {"elevation_max", 30}, {"resolution", {96, 64}}};
  j["lights"] = {{{"azimuth", 30}, {"elevation", 60}, {"diffuse_strength", 0.5}, {"ambient_strength", 0.4}}};
  j["background"] = {0.0, 0.0, 0.0};
  j["target_renderer"] = {{"spec_strength", 0.1}, {"shininess", 8}, {"gamma", false}};
  const SceneDocument a = parse_scene_document(j, "/base");
  const SceneDocument b = parse_scene_document(scene_document_json(a, "/base"), "/base");
  EXPECT_EQ(b.scene.mesh_path, a.scene.mesh_path);
  EXPECT_EQ(b.scene.rig.width, 96);
  EXPECT_EQ(b.scene.rig.height, 64);
  EXPECT_EQ(b.scene.rig.elevation_min, -10);
  EXPECT_EQ(b.scene.lights.size(), 1u);
  EXPECT_EQ(b.scene.lights[0].azimuth, 30);
  EXPECT_EQ(b.scene.background, a.scene.background);
  EXPECT_EQ(b.target.gamma, false);
  EXPECT_EQ(b.target.shininess, 8);
  EXPECT_EQ(scene_document_json(b, "/base"), scene_document_json(a, "/base"));
}

TEST(OutputSet, CommitsAtomicallyAndRefusesOverwrite) {
  TempDir tmp("advtex_outputset_test");
  const fs::path file = tmp.path / "sub" / "a.txt";
  {
    OutputSet out(false);
    out.write_text(file, "hello");
    EXPECT_FALSE(fs::exists(file));
    EXPECT_TRUE(fs::exists(file.string() + ".partial"));
    out.commit();
    ASSERT_EQ(out.committed().size(), 1u);
  }
  EXPECT_TRUE(fs::exists(file));
  EXPECT_FALSE(fs::exists(file.string() + ".partial"));

  {
    OutputSet out(false);
    EXPECT_EQ(code_of([&] { out.write_text(file, "again"); }), ErrorCode::IoError);
  }
  {
    OutputSet out(true);
    out.write_text(tmp.path / "b.txt", "dropped");
    // No commit: the partial file is cleaned up.
  }
  EXPECT_FALSE(fs::exists(tmp.path / "b.txt"));
  EXPECT_FALSE(fs::exists(tmp.path / "b.txt.partial"));
  {
    OutputSet out(true);
    out.write_text(file, "replaced");
    out.commit();
  }
  std::ifstream in(file);
  std::string text;
  std::getline(in, text);
  EXPECT_EQ(text, "replaced");
}

TEST(Corpus, WrittenScenesLoadBack) {
  TempDir tmp("advtex_corpus_test");
  {
    OutputSet out(false);
    write_corpus(out, tmp.path, 2, 0);
    out.commit();
  }
  const auto scenes = read_corpus_index(tmp.path);
  ASSERT_EQ(scenes.size(), 2u);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const SceneDocument doc = load_scene_document(scenes[i]);
    EXPECT_EQ(doc.scene.label, static_cast<int>(i));
    const Scene s = load_scene(doc.scene);
    EXPECT_TRUE(validate_mesh(s.mesh).empty());
    const Scene mem = make_corpus_scene(desk_corpus(2)[i], static_cast<int>(i));
    EXPECT_TRUE(s.texture == mem.texture);
    ASSERT_EQ(s.mesh.vertices.size(), mem.mesh.vertices.size());
    for (std::size_t v = 0; v < s.mesh.vertices.size(); ++v) EXPECT_EQ(s.mesh.vertices[v], mem.mesh.vertices[v]);
  }
}
