// advtex: command-line driver for corpus generation, training, saliency,
// attacks, evaluation and reporting.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advtex/advtex.hpp"

namespace {

using namespace advtex;
using nlohmann::ordered_json;

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kRuntime = 4 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::MissingUV:
    case ErrorCode::InvalidMesh:
    case ErrorCode::IsolatedVertex:
    case ErrorCode::UnsupportedKind:
    case ErrorCode::GimbalLock:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::SpecMismatch:
    case ErrorCode::ResolutionMismatch:
      return kConfig;
    default:
      return kRuntime;
  }
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

void print_error(std::string_view code, const std::string& message) {
  std::cerr << "error: code=" << code << " message=\"" << escape(message) << "\"\n";
}

std::optional<double> parse_tau(const std::string& s) {
  if (s == "none") return std::nullopt;
  double v = 0.0;
  if (!detail::parse_double(s, v)) fail(ErrorCode::InvalidArgument, "bad saliency threshold '" + s + "'");
  if (!(v > 0.0 && v < 1.0)) fail(ErrorCode::InvalidArgument, "saliency threshold must lie in (0,1)");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = detail::trim(item);
    if (t.empty()) fail(ErrorCode::InvalidArgument, "empty entry in list '" + s + "'");
    out.emplace_back(t);
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty list");
  return out;
}

ordered_json tau_json(const std::optional<double>& tau) {
  return tau ? ordered_json(*tau) : ordered_json("none");
}

ordered_json rgb_json(const Rgb& c) { return ordered_json::array({c[0], c[1], c[2]}); }

Image<std::uint8_t> mask_image(const TexelMask& mask) {
  Image<std::uint8_t> img(mask.width(), mask.height(), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img[i] = mask[i] ? 255 : 0;
  return img;
}

// ---- options ------------------------------------------------------------

struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
  bool force = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads for per-view work")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_flag("--force", c.force, "Overwrite existing outputs");
}

struct AttackOptions {
  double epsilon = 0.05;
  double alpha = 0.01;
  int steps = 100;
  int view_batch = 0;
  bool random_start = false;
};

void add_attack_options(CLI::App* sub, AttackOptions& a) {
  sub->add_option("--alpha", a.alpha, "Step size")->capture_default_str();
  sub->add_option("--steps", a.steps, "PGD iterations")->capture_default_str();
  sub->add_option("--view-batch", a.view_batch, "Views per step (0: whole rig)")->capture_default_str();
  sub->add_flag("--random-start", a.random_start, "Start from a random point in the ball");
}

AttackConfig attack_config(const AttackOptions& a, double epsilon, const std::optional<double>& tau,
                           std::uint64_t seed) {
  AttackConfig cfg;
  cfg.epsilon = epsilon;
  cfg.alpha = a.alpha;
  cfg.n_steps = a.steps;
  cfg.view_batch = a.view_batch;
  cfg.random_start = a.random_start;
  cfg.saliency_threshold = tau;
  cfg.seed = seed;
  return cfg;
}

ordered_json attack_config_json(const AttackConfig& c) {
  return {{"epsilon", c.epsilon},
          {"alpha", c.alpha},
          {"steps", c.n_steps},
          {"tau", tau_json(c.saliency_threshold)},
          {"view_batch", c.view_batch},
          {"random_start", c.random_start}};
}

ordered_json scene_snapshot(const LoadedScene& s) {
  ordered_json j = scene_document_json(s.doc, s.config_path.parent_path());
  j["resolved_background"] = rgb_json(s.rig.background);
  return j;
}

// ---- commands -----------------------------------------------------------

int cmd_gen_corpus(const fs::path& out_dir, int objects, const Common& c) {
  const Stopwatch clock;
  OutputSet out(c.force);
  write_corpus(out, out_dir, objects, c.seed);
  out.commit();
  RunManifest m{"gen-corpus", {{"out", out_dir.generic_string()}, {"objects", objects}}, {}, out.committed(),
                c.seed, clock.seconds()};
  write_manifest(out_dir / "gen-corpus.manifest.json", m, c.force);
  return kOk;
}

int cmd_train(const fs::path& corpus, const fs::path& weights, TrainParams params, const Common& c) {
  const Stopwatch clock;
  params.seed = c.seed;
  OutputSet out(c.force);
  out.reserve(weights);
  const auto scenes = read_corpus_index(corpus);
  const CorpusTraining t = train_on_scenes(scenes, params, [](int epoch, double loss) {
    std::fprintf(stderr, "epoch %d loss %.6f\n", epoch, loss);
  });
  out.write_bytes(weights, encode_weights(t.result.model));
  out.commit();

  RunManifest m;
  m.command = "train";
  m.seed = c.seed;
  m.config = {{"corpus", corpus.generic_string()},
              {"epochs", params.epochs},
              {"batch_size", params.batch_size},
              {"learning_rate", params.learning_rate},
              {"momentum", params.momentum},
              {"classifier_id", classifier_id(t.result.model)},
              {"train_accuracy", t.result.final_accuracy},
              {"epoch_loss", t.result.epoch_loss}};
  m.inputs.push_back(corpus / kCorpusIndex);
  for (const auto& s : scenes) m.inputs.push_back(s);
  m.outputs = out.committed();
  m.wall_seconds = clock.seconds();
  write_manifest(fs::path(weights.string() + ".manifest.json"), m, c.force);
  std::printf("%s train_accuracy=%.6f\n", classifier_id(t.result.model).c_str(), t.result.final_accuracy);
  return kOk;
}

int cmd_saliency(const fs::path& scene_file, const fs::path& weights_file, double tau, const fs::path& out_dir,
                 const Common& c) {
  const Stopwatch clock;
  const auto model = load_weights(weights_file, nullptr);
  const std::string clf = classifier_id(model);
  const LoadedScene s = load_rendered_scene(scene_file, &model, c.threads);
  const std::string stem = s.scene.object_id + "_tau" + detail::fmt_tau(tau) + "_" + clf;
  OutputSet out(c.force);
  const fs::path sal_png = out_dir / (stem + "_saliency.png");
  const fs::path mask_png = out_dir / (stem + "_mask.png");
  const fs::path summary = out_dir / (stem + "_saliency.json");
  for (const auto& p : {sal_png, mask_png, summary}) out.reserve(p);

  const SaliencyMap map = scene_saliency(s, model, tau, c.threads);
  out.write_png(sal_png, map.texel_saliency);
  out.write_png(mask_png, mask_image(map.mask));
  ordered_json j{{"object_id", s.scene.object_id},
                 {"classifier_id", clf},
                 {"tau", tau},
                 {"mask_texels", mask_count(map.mask)},
                 {"total_texels", map.mask.size()},
                 {"reachable_texels", mask_count(reachable_texels(s.fragments))}};
  out.write_text(summary, dump_json(j));
  out.commit();
  RunManifest m{"saliency", {{"scene", scene_snapshot(s)}, {"tau", tau}}, {scene_file, weights_file,
                s.doc.scene.mesh_path, s.doc.scene.texture_path}, out.committed(), c.seed, clock.seconds()};
  write_manifest(out_dir / (stem + "_saliency.manifest.json"), m, c.force);
  return kOk;
}

/// Writes texture + report bundle for one attack; returns the written paths.
void stage_attack(OutputSet& out, const fs::path& dir, const std::string& stem, const AttackOutcome& o) {
  out.write_png(dir / (stem + ".png"), o.adversarial);
  out.write_text(dir / (stem + kReportSuffix), dump_json(attack_bundle_json(o)));
}

void print_attack(const std::string& stem, const AttackOutcome& o) {
  if (o.surrogate.a_before < 0.5) {
    std::fprintf(stderr, "warning: %s: clean surrogate accuracy %.3f is below 0.5\n", stem.c_str(),
                 o.surrogate.a_before);
  }
  auto drop = [](const AttackReport& r) {
    return r.a_drop ? detail::fmt_number(*r.a_drop) : std::string("n.a.");
  };
  std::printf("%s surrogate_a_drop=%s target_a_drop=%s n_pct=%.6f seconds=%.2f\n", stem.c_str(),
              drop(o.surrogate).c_str(), drop(o.target).c_str(), o.surrogate.n_pct, o.wall_seconds);
}

int cmd_attack(const fs::path& scene_file, const fs::path& weights_file, const AttackOptions& a,
               const std::optional<double>& tau, const fs::path& out_dir, const Common& c) {
  const Stopwatch clock;
  const auto model = load_weights(weights_file, nullptr);
  const LoadedScene s = load_rendered_scene(scene_file, &model, c.threads);
  const AttackConfig cfg = attack_config(a, a.epsilon, tau, c.seed);
  validate_attack_config(cfg, s.rig.size());
  const std::string stem = attack_stem(s.scene.object_id, cfg.epsilon, tau, classifier_id(model));
  OutputSet out(c.force);
  out.reserve(out_dir / (stem + ".png"));
  out.reserve(out_dir / (stem + kReportSuffix));

  std::optional<TexelMask> mask;
  if (tau) mask = scene_saliency(s, model, *tau, c.threads).mask;
  const AttackOutcome o = attack_scene(s, model, cfg, mask, c.threads);
  stage_attack(out, out_dir, stem, o);
  out.commit();
  RunManifest m{"attack", {{"scene", scene_snapshot(s)}, {"attack", attack_config_json(cfg)}},
                {scene_file, weights_file, s.doc.scene.mesh_path, s.doc.scene.texture_path}, out.committed(),
                c.seed, clock.seconds()};
  write_manifest(out_dir / (stem + ".manifest.json"), m, c.force);
  print_attack(stem, o);
  return kOk;
}

int cmd_evaluate(const fs::path& scene_file, const fs::path& weights_file, const fs::path& texture_file,
                 const std::string& renderer_name, const fs::path& report, const Common& c) {
  const Stopwatch clock;
  const RendererKind renderer = parse_renderer(renderer_name);
  const auto model = load_weights(weights_file, nullptr);
  const LoadedScene s = load_rendered_scene(scene_file, &model, c.threads);
  const Texture<float> texture = load_png_rgb(texture_file);
  if (!texture.same_shape(s.scene.texture)) {
    fail(ErrorCode::ShapeMismatch, "texture size differs from the scene's texture");
  }
  OutputSet out(c.force);
  out.reserve(report);
  const RigAccuracy acc = rig_accuracy(s, texture, model, renderer, c.threads);
  ordered_json j{{"object_id", s.scene.object_id},
                 {"label", s.scene.label},
                 {"renderer", std::string(to_string(renderer))},
                 {"classifier_id", classifier_id(model)},
                 {"texture_sha256", sha256_file_hex(texture_file)},
                 {"background", rgb_json(s.rig.background)},
                 {"accuracy", acc.accuracy},
                 {"predictions", acc.predictions}};
  out.write_text(report, dump_json(j));
  out.commit();
  RunManifest m{"evaluate", {{"scene", scene_snapshot(s)}, {"renderer", std::string(to_string(renderer))}},
                {scene_file, weights_file, texture_file, s.doc.scene.mesh_path}, out.committed(), c.seed,
                clock.seconds()};
  write_manifest(fs::path(report.string() + ".manifest.json"), m, c.force);
  std::printf("%s %s accuracy=%.6f\n", s.scene.object_id.c_str(), std::string(to_string(renderer)).c_str(),
              acc.accuracy);
  return kOk;
}

int cmd_report(const fs::path& in_dir, const fs::path& out_dir, const Common& c) {
  const Stopwatch clock;
  const auto reports = collect_reports(in_dir);
  const EmittedReport e = emit_report(reports);
  OutputSet out(c.force);
  out.write_text(out_dir / "table.csv", e.table);
  out.write_text(out_dir / "scatter.csv", e.scatter);
  out.commit();
  RunManifest m{"report", {{"in", in_dir.generic_string()}, {"reports", reports.size()}}, {}, out.committed(),
                c.seed, clock.seconds()};
  write_manifest(out_dir / "report.manifest.json", m, c.force);
  return kOk;
}

int cmd_sweep(const std::vector<fs::path>& scene_files, const fs::path& weights_file, const AttackOptions& a,
              const std::string& eps_list, const std::string& tau_list, const fs::path& out_dir, const Common& c) {
  const Stopwatch clock;
  std::vector<double> epsilons;
  for (const auto& e : split_list(eps_list)) {
    double v = 0.0;
    if (!detail::parse_double(e, v)) fail(ErrorCode::InvalidArgument, "bad epsilon '" + e + "'");
    epsilons.push_back(v);
  }
  std::vector<std::optional<double>> taus;
  for (const auto& t : split_list(tau_list)) taus.push_back(parse_tau(t));

  const auto model = load_weights(weights_file, nullptr);
  const std::string clf = classifier_id(model);
  OutputSet out(c.force);
  out.reserve(out_dir / "table.csv");
  out.reserve(out_dir / "scatter.csv");

  std::vector<LoadedScene> scenes;
  for (const auto& f : scene_files) scenes.push_back(load_rendered_scene(f, &model, c.threads));
  for (const auto& s : scenes) {
    for (double eps : epsilons) {
      for (const auto& tau : taus) {
        validate_attack_config(attack_config(a, eps, tau, c.seed), s.rig.size());
        const std::string stem = attack_stem(s.scene.object_id, eps, tau, clf);
        out.reserve(out_dir / (stem + ".png"));
        out.reserve(out_dir / (stem + kReportSuffix));
      }
    }
  }

  std::vector<AttackReport> reports;
  ordered_json objects = ordered_json::array();
  for (const auto& s : scenes) {
    // One saliency pass per object; each threshold only re-binarises it.
    std::optional<SaliencyMap> saliency;
    std::map<double, TexelMask> masks;
    for (const auto& tau : taus) {
      if (!tau) continue;
      if (!saliency) saliency = scene_saliency(s, model, *tau, c.threads);
      masks.emplace(*tau, binarize(saliency->texel_saliency, *tau));
      out.write_png(out_dir / (s.scene.object_id + "_tau" + detail::fmt_tau(tau) + "_" + clf + "_mask.png"),
                    mask_image(masks.at(*tau)));
    }
    for (double eps : epsilons) {
      for (const auto& tau : taus) {
        const AttackConfig cfg = attack_config(a, eps, tau, c.seed);
        const std::optional<TexelMask> mask = tau ? std::optional<TexelMask>(masks.at(*tau)) : std::nullopt;
        const AttackOutcome o = attack_scene(s, model, cfg, mask, c.threads);
        const std::string stem = attack_stem(s.scene.object_id, eps, tau, clf);
        stage_attack(out, out_dir, stem, o);
        reports.push_back(o.surrogate);
        reports.push_back(o.target);
        print_attack(stem, o);
      }
    }
    objects.push_back(scene_snapshot(s));
  }
  const EmittedReport e = emit_report(reports);
  out.write_text(out_dir / "table.csv", e.table);
  out.write_text(out_dir / "scatter.csv", e.scatter);
  out.commit();

  RunManifest m;
  m.command = "sweep";
  m.seed = c.seed;
  m.config = {{"scenes", objects},
              {"epsilons", epsilons},
              {"taus", ordered_json::array()},
              {"alpha", a.alpha},
              {"steps", a.steps},
              {"view_batch", a.view_batch},
              {"random_start", a.random_start}};
  for (const auto& t : taus) m.config["taus"].push_back(tau_json(t));
  m.inputs.push_back(weights_file);
  for (const auto& s : scenes) {
    m.inputs.push_back(s.config_path);
    m.inputs.push_back(s.doc.scene.mesh_path);
    m.inputs.push_back(s.doc.scene.texture_path);
  }
  m.outputs = out.committed();
  m.wall_seconds = clock.seconds();
  write_manifest(out_dir / "sweep.manifest.json", m, c.force);
  return kOk;
}

int cmd_render(const fs::path& scene_file, const std::optional<fs::path>& weights_file,
               const std::optional<fs::path>& texture_file, int view, const std::string& renderer_name,
               const fs::path& png, const Common& c) {
  const RendererKind renderer = parse_renderer(renderer_name);
  std::optional<ClassifierModel<float>> model;
  if (weights_file) model = load_weights(*weights_file, nullptr);
  const LoadedScene s = load_rendered_scene(scene_file, model ? &*model : nullptr, c.threads);
  if (view < 0 || static_cast<std::size_t>(view) >= s.rig.size()) {
    fail(ErrorCode::InvalidArgument, "view index outside the rig");
  }
  const Texture<float> texture = texture_file ? load_png_rgb(*texture_file) : s.scene.texture;
  const auto& frag = s.fragments[view];
  const Image<float> img =
      renderer == RendererKind::Surrogate
          ? shade(frag, texture, s.rig.background)
          : detail::shade_target(frag, texture, s.rig.views[view], s.rig.light_for(view), s.rig.background,
                                 s.doc.target);
  OutputSet out(c.force);
  out.write_png(png, img);
  out.commit();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial textures for 3D objects through a differentiable surrogate renderer"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  AttackOptions attack;
  fs::path out, scene, weights, corpus, texture, in;
  std::vector<fs::path> scenes;
  int objects = 10;
  double tau_value = 0.05;
  std::string tau_text, renderer, epsilons = "0.05,0.1,0.5", taus = "none,0.05,0.2";
  TrainParams train;
  int view = 0;
  std::optional<fs::path> weights_opt, texture_opt;

  auto* gen = app.add_subcommand("gen-corpus", "Generate the procedural object corpus");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--objects", objects, "Number of objects")->check(CLI::Range(1, kMaxCorpusObjects))
      ->capture_default_str();
  add_common(gen, common);

  auto* tr = app.add_subcommand("train", "Train the classifier on clean corpus renders");
  tr->add_option("--corpus", corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--out", out, "Weight file")->required();
  tr->add_option("--epochs", train.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--batch-size", train.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--lr", train.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--momentum", train.momentum)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  add_common(tr, common);

  auto* sal = app.add_subcommand("saliency", "Texture-space saliency map and mask");
  sal->add_option("--scene", scene, "Scene file")->required()->check(CLI::ExistingFile);
  sal->add_option("--weights", weights, "Weight file")->required()->check(CLI::ExistingFile);
  sal->add_option("--tau", tau_value, "Mask threshold in (0,1)")->required();
  sal->add_option("--out", out, "Output directory")->required();
  add_common(sal, common);

  auto* att = app.add_subcommand("attack", "EOT-PGD texture attack");
  att->add_option("--scene", scene, "Scene file")->required()->check(CLI::ExistingFile);
  att->add_option("--weights", weights, "Weight file")->required()->check(CLI::ExistingFile);
  att->add_option("--epsilon", attack.epsilon, "Texture-space ball radius")->capture_default_str();
  att->add_option("--tau", tau_text, "Saliency threshold (omit or 'none': no mask)");
  att->add_option("--out", out, "Output directory")->required();
  add_attack_options(att, attack);
  add_common(att, common);

  auto* ev = app.add_subcommand("evaluate", "Rig accuracy of a texture under one renderer");
  ev->add_option("--scene", scene, "Scene file")->required()->check(CLI::ExistingFile);
  ev->add_option("--weights", weights, "Weight file")->required()->check(CLI::ExistingFile);
  ev->add_option("--texture", texture, "Texture PNG")->required()->check(CLI::ExistingFile);
  ev->add_option("--renderer", renderer, "surrogate | target")->required()
      ->check(CLI::IsMember({"surrogate", "target"}));
  ev->add_option("--out", out, "Report file")->required();
  add_common(ev, common);

  auto* rep = app.add_subcommand("report", "Table and scatter data from attack reports");
  rep->add_option("--in", in, "Directory with attack reports")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", out, "Output directory")->required();
  add_common(rep, common);

  auto* sw = app.add_subcommand("sweep", "Attack grid over epsilon and saliency threshold");
  sw->add_option("--scene", scenes, "Scene file (repeatable)")->required()->check(CLI::ExistingFile);
  sw->add_option("--weights", weights, "Weight file")->required()->check(CLI::ExistingFile);
  sw->add_option("--epsilons", epsilons, "Comma-separated radii")->capture_default_str();
  sw->add_option("--taus", taus, "Comma-separated thresholds, 'none' for no mask")->capture_default_str();
  sw->add_option("--out", out, "Output directory")->required();
  add_attack_options(sw, attack);
  add_common(sw, common);

  auto* ren = app.add_subcommand("render", "Render one rig view to PNG");
  ren->add_option("--scene", scene, "Scene file")->required()->check(CLI::ExistingFile);
  ren->add_option("--weights", weights_opt, "Weight file, resolves an auto background");
  ren->add_option("--texture", texture_opt, "Texture PNG (default: the scene's)");
  ren->add_option("--view", view, "Rig view index")->capture_default_str();
  ren->add_option("--renderer", renderer, "surrogate | target")->required()
      ->check(CLI::IsMember({"surrogate", "target"}));
  ren->add_option("--out", out, "PNG file")->required();
  add_common(ren, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << app.help();
    print_error("Usage", e.what());
    return kUsage;
  }

  try {
    if (app.got_subcommand(gen)) return cmd_gen_corpus(out, objects, common);
    if (app.got_subcommand(tr)) return cmd_train(corpus, out, train, common);
    if (app.got_subcommand(sal)) return cmd_saliency(scene, weights, tau_value, out, common);
    if (app.got_subcommand(att)) {
      const std::optional<double> tau = tau_text.empty() ? std::nullopt : parse_tau(tau_text);
      return cmd_attack(scene, weights, attack, tau, out, common);
    }
    if (app.got_subcommand(ev)) return cmd_evaluate(scene, weights, texture, renderer, out, common);
    if (app.got_subcommand(rep)) return cmd_report(in, out, common);
    if (app.got_subcommand(sw)) return cmd_sweep(scenes, weights, attack, epsilons, taus, out, common);
    if (app.got_subcommand(ren)) return cmd_render(scene, weights_opt, texture_opt, view, renderer, out, common);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    print_error("IoError", e.what());
    return kRuntime;
  }
  return kUsage;
}
