#pragma once

#include <string>

#include <json.hpp>

#include "advtex/errors.hpp"
#include "advtex/metrics.hpp"

namespace advtex {

/// Serialised report: everything except wall-clock time, which lives in the
/// run manifest so that reports stay byte-identical across reruns.
inline nlohmann::ordered_json report_to_json(const AttackReport& r) {
  nlohmann::ordered_json j;
  j["object_id"] = r.object_id;
  j["label"] = r.label;
  j["renderer"] = r.renderer;
  j["classifier_id"] = r.classifier_id;
  j["config"] = {{"epsilon", r.epsilon},
                 {"alpha", r.alpha},
                 {"steps", r.steps},
                 {"tau", r.tau ? nlohmann::ordered_json(*r.tau) : nlohmann::ordered_json(nullptr)},
                 {"view_batch", r.view_batch},
                 {"random_start", r.random_start},
                 {"seed", r.seed}};
  j["metrics"] = {{"a_before", r.a_before},
                  {"a_after", r.a_after},
                  {"a_drop", r.a_drop ? nlohmann::ordered_json(*r.a_drop) : nlohmann::ordered_json("n.a.")},
                  {"n_pct", r.n_pct},
                  {"changed_texel_fraction", r.changed_texel_fraction}};
  auto preds = nlohmann::ordered_json::array();
  for (const auto& p : r.predictions) preds.push_back({p.view, p.clean, p.adversarial});
  j["predictions"] = preds;
  j["loss_trajectory"] = r.loss_trajectory;
  return j;
}

inline AttackReport report_from_json(const nlohmann::json& j) {
  try {
    AttackReport r;
    r.object_id = j.at("object_id").get<std::string>();
    r.label = j.at("label").get<int>();
    r.renderer = j.at("renderer").get<std::string>();
    r.classifier_id = j.at("classifier_id").get<std::string>();
    const auto& c = j.at("config");
    r.epsilon = c.at("epsilon").get<double>();
    r.alpha = c.at("alpha").get<double>();
    r.steps = c.at("steps").get<int>();
    if (!c.at("tau").is_null()) r.tau = c.at("tau").get<double>();
    r.view_batch = c.at("view_batch").get<int>();
    r.random_start = c.at("random_start").get<bool>();
    r.seed = c.at("seed").get<std::uint64_t>();
    const auto& m = j.at("metrics");
    r.a_before = m.at("a_before").get<double>();
    r.a_after = m.at("a_after").get<double>();
    if (m.at("a_drop").is_number()) r.a_drop = m.at("a_drop").get<double>();
    r.n_pct = m.at("n_pct").get<double>();
    r.changed_texel_fraction = m.at("changed_texel_fraction").get<double>();
    for (const auto& p : j.at("predictions")) {
      r.predictions.push_back({p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()});
    }
    r.loss_trajectory = j.at("loss_trajectory").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("malformed attack report: ") + e.what());
  }
}

}  // namespace advtex
