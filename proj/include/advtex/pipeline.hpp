#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "advtex/attack.hpp"
#include "advtex/config.hpp"
#include "advtex/corpus.hpp"
#include "advtex/digest.hpp"
#include "advtex/errors.hpp"
#include "advtex/metrics.hpp"
#include "advtex/report_io.hpp"
#include "advtex/saliency.hpp"
#include "advtex/weights_io.hpp"

namespace advtex {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

/// Outputs of one command. Files are written under `<name>.partial` and
/// renamed into place by commit(); anything uncommitted is removed.
class OutputSet {
 public:
  explicit OutputSet(bool force) : force_(force) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  ~OutputSet() {
    std::error_code ec;
    for (const auto& p : staged_) fs::remove(partial(p), ec);
  }

  /// Fails early if `path` exists and overwriting was not requested.
  void reserve(const fs::path& path) const {
    if (!force_ && fs::exists(path)) {
      fail(ErrorCode::IoError, "refusing to overwrite " + path.string() + " (pass --force)");
    }
  }

  fs::path stage(const fs::path& path) {
    reserve(path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    staged_.push_back(path);
    return partial(path);
  }

  void write_text(const fs::path& path, const std::string& text) {
    const fs::path tmp = stage(path);
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
  }

  void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    const fs::path tmp = stage(path);
    std::ofstream out(tmp, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
  }

  template <typename T>
  void write_png(const fs::path& path, const Image<T>& img) {
    save_png(stage(path), img);
  }

  void commit() {
    for (const auto& p : staged_) {
      std::error_code ec;
      fs::rename(partial(p), p, ec);
      if (ec) fail(ErrorCode::IoError, "cannot move output into place: " + p.string());
      committed_.push_back(p);
    }
    staged_.clear();
  }

  const std::vector<fs::path>& committed() const { return committed_; }

 private:
  static fs::path partial(const fs::path& p) { return fs::path(p.string() + ".partial"); }

  bool force_;
  std::vector<fs::path> staged_;
  std::vector<fs::path> committed_;
};

inline std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// ---- run manifest -------------------------------------------------------

struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

inline nlohmann::ordered_json manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["version"] = kVersion;
  j["seed"] = m.seed;
  j["config"] = m.config;
  auto files = [](const std::vector<fs::path>& paths) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : paths) arr.push_back({{"path", p.generic_string()}, {"sha256", sha256_file_hex(p)}});
    return arr;
  };
  j["inputs"] = files(m.inputs);
  j["outputs"] = files(m.outputs);
  j["wall_seconds"] = m.wall_seconds;
  return j;
}

inline void write_manifest(const fs::path& path, const RunManifest& m, bool force) {
  OutputSet out(force);
  out.write_text(path, dump_json(manifest_json(m)));
  out.commit();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---- corpus on disk -----------------------------------------------------

inline constexpr const char* kCorpusIndex = "corpus.json";

/// Writes mesh, texture and scene file per object plus the corpus index.
inline void write_corpus(OutputSet& out, const fs::path& dir, int count, std::uint64_t seed) {
  const auto entries = desk_corpus(count, seed);
  nlohmann::ordered_json index;
  index["seed"] = seed;
  index["objects"] = nlohmann::ordered_json::array();
  for (int label = 0; label < count; ++label) {
    const auto& e = entries[label];
    const Scene scene = make_corpus_scene(e, label);
    const SceneDocument doc = corpus_scene_document(e, label, dir);
    out.write_text(doc.scene.mesh_path, serialize_obj(scene.mesh));
    out.write_png(doc.scene.texture_path, scene.texture);
    const std::string scene_file = e.id + ".scene.json";
    out.write_text(dir / scene_file, scene_document_json(doc, dir).dump(2) + "\n");
    index["objects"].push_back({{"id", e.id}, {"label", label}, {"scene", scene_file}});
  }
  out.write_text(dir / kCorpusIndex, dump_json(index));
}

/// Scene files of a corpus directory, in label order.
inline std::vector<fs::path> read_corpus_index(const fs::path& dir) {
  std::ifstream in(dir / kCorpusIndex);
  if (!in) fail(ErrorCode::InvalidConfig, "no corpus index in " + dir.string());
  std::vector<fs::path> scenes;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& o : j.at("objects")) scenes.push_back(dir / o.at("scene").get<std::string>());
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::InvalidConfig, "malformed corpus index in " + dir.string());
  }
  if (scenes.empty()) fail(ErrorCode::InvalidConfig, "corpus index lists no objects");
  return scenes;
}

// ---- scenes ready for rendering -----------------------------------------

struct LoadedScene {
  fs::path config_path;
  SceneDocument doc;
  Scene scene;
  ViewRig rig;
  std::vector<FragmentBuffer> fragments;
};

/// Loads a scene file and rasterises its rig. An "auto" background is
/// resolved with `model` under the target renderer; without a model it
/// stays black.
inline LoadedScene load_rendered_scene(const fs::path& config, const ClassifierModel<float>* model,
                                       int threads = 1) {
  LoadedScene s;
  s.config_path = config;
  s.doc = load_scene_document(config);
  s.scene = load_scene(s.doc.scene);
  s.rig = build_view_rig(s.doc.scene);
  if (model && s.scene.label >= model->spec().n_classes) {
    fail(ErrorCode::InvalidConfig, "scene label " + std::to_string(s.scene.label) + " outside the classifier's " +
                                       std::to_string(model->spec().n_classes) + " classes");
  }
  s.fragments = rasterize_rig(s.scene, s.rig);
  if (!s.doc.scene.background && model) {
    s.rig.background = choose_background([&](const Rgb& bg) {
      ViewRig r = s.rig;
      r.background = bg;
      return accuracy_over_rig(s.scene, r, s.fragments, s.scene.texture, *model, RendererKind::Target,
                               s.doc.target, threads)
          .accuracy;
    });
  }
  return s;
}

inline RigAccuracy rig_accuracy(const LoadedScene& s, const Texture<float>& texture,
                                const ClassifierModel<float>& model, RendererKind renderer, int threads = 1) {
  return accuracy_over_rig(s.scene, s.rig, s.fragments, texture, model, renderer, s.doc.target, threads);
}

// ---- training -----------------------------------------------------------

struct CorpusTraining {
  TrainResult result;
  std::vector<std::string> object_ids;
};

inline CorpusTraining train_on_scenes(const std::vector<fs::path>& scene_files, const TrainParams& params,
                                      const std::function<void(int, double)>& on_epoch = {}) {
  CorpusTraining out{TrainResult{ClassifierModel<float>(ClassifierSpec::standard(2)), 0.0, {}, 0}, {}};
  std::vector<LabeledView> views;
  int n_classes = 0;
  for (const auto& path : scene_files) {
    const SceneDocument doc = load_scene_document(path);
    const Scene scene = load_scene(doc.scene);
    auto v = training_views(scene, build_view_rig(doc.scene), doc.target);
    views.insert(views.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    n_classes = std::max(n_classes, scene.label + 1);
    out.object_ids.push_back(scene.object_id);
  }
  out.result = train_classifier(views, ClassifierSpec::standard(n_classes), params, on_epoch);
  return out;
}

// ---- saliency and attack ------------------------------------------------

inline std::string attack_stem(const std::string& object, double epsilon, const std::optional<double>& tau,
                               const std::string& classifier) {
  return object + "_eps" + detail::fmt_eps(epsilon) + "_tau" + detail::fmt_tau(tau) + "_" + classifier;
}

inline SaliencyMap scene_saliency(const LoadedScene& s, const ClassifierModel<float>& model, double tau,
                                  int threads = 1) {
  return build_saliency_map(s.scene, s.rig, model, s.doc.target, tau, threads);
}

struct AttackOutcome {
  Texture<float> adversarial;
  AttackReport surrogate;
  AttackReport target;
  double wall_seconds = 0.0;
};

/// One attack on a loaded scene, evaluated white-box (surrogate) and for
/// transfer (target).
inline AttackOutcome attack_scene(const LoadedScene& s, const ClassifierModel<float>& model,
                                  const AttackConfig& cfg, const std::optional<TexelMask>& mask,
                                  int threads = 1, const StepObserver& observer = {}) {
  const Stopwatch clock;
  const std::string clf = classifier_id(model);
  const AttackResult r = run_attack(s.scene, s.rig, s.fragments, model, cfg, mask, threads, observer);
  AttackOutcome out;
  out.adversarial = r.adversarial;
  auto fill = [&](RendererKind kind) {
    const RigAccuracy before = rig_accuracy(s, s.scene.texture, model, kind, threads);
    const RigAccuracy after = rig_accuracy(s, r.adversarial, model, kind, threads);
    AttackReport rep = make_report(s.scene, kind, before, after, s.scene.texture, r.adversarial);
    rep.classifier_id = clf;
    rep.epsilon = cfg.epsilon;
    rep.alpha = cfg.alpha;
    rep.steps = cfg.n_steps;
    rep.tau = cfg.saliency_threshold;
    rep.view_batch = cfg.view_batch;
    rep.random_start = cfg.random_start;
    rep.seed = cfg.seed;
    rep.loss_trajectory = r.loss_trajectory;
    return rep;
  };
  out.surrogate = fill(RendererKind::Surrogate);
  out.target = fill(RendererKind::Target);
  out.wall_seconds = clock.seconds();
  out.surrogate.wall_seconds = out.target.wall_seconds = out.wall_seconds;
  return out;
}

/// Attack report file: the white-box and transfer evaluations of one attack.
inline nlohmann::ordered_json attack_bundle_json(const AttackOutcome& o) {
  nlohmann::ordered_json j;
  j["surrogate"] = report_to_json(o.surrogate);
  j["target"] = report_to_json(o.target);
  return j;
}

inline constexpr const char* kReportSuffix = ".report.json";

/// Every report found in `dir` (attack bundles), in file-name order.
inline std::vector<AttackReport> collect_reports(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::InvalidConfig, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > std::char_traits<char>::length(kReportSuffix) &&
        name.ends_with(kReportSuffix)) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<AttackReport> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::InvalidConfig, "report is not valid JSON: " + f.string());
    }
    for (const char* key : {"surrogate", "target"}) {
      if (!j.contains(key)) fail(ErrorCode::InvalidConfig, std::string("report lacks '") + key + "': " + f.string());
      out.push_back(report_from_json(j.at(key)));
    }
  }
  if (out.empty()) fail(ErrorCode::InvalidConfig, "no attack reports in " + dir.string());
  return out;
}

}  // namespace advtex
