// Copyright 2026 The SIAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sian/pipeline/config.hpp"

#include <fstream>
#include <sstream>

namespace sian {
namespace pipeline {
namespace {

using nlohmann::json;

void fail_config(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

// Typed field readers; every getter erases the key it consumed so that
// whatever remains at the end can be reported as unknown.
class Section {
 public:
  Section(json* j, std::string path) : j_(j), path_(std::move(path)) {}

  template <typename T>
  void get(const char* key, T* out) {
    auto it = j_->find(key);
    if (it == j_->end()) return;
    try {
      *out = it->get<T>();
    } catch (const json::exception&) {
      fail_config("bad value for '" + path_ + key + "': " + it->dump());
    }
    j_->erase(it);
  }

  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      fail_config("unknown key '" + path_ + it.key() + "'");
  }

 private:
  json* j_;
  std::string path_;
};

json* subsection(json* j, const char* key) {
  auto it = j->find(key);
  if (it == j->end()) return nullptr;
  if (!it->is_object()) fail_config(std::string("section '") + key + "' must be an object");
  return &*it;
}

}  // namespace

void TrainConfig::validate() const {
  net::validate(net);
  losses::validate(loss);
  losses::reg_kind_from_string(reg_kind);  // throws on unknown names
  if (epochs < 0) fail_config("train.epochs must be >= 0");
  if (batch_size < 1) fail_config("train.batch_size must be >= 1");
  // Zero is allowed: it freezes that optimizer without touching the step.
  if (!(lr_g >= 0.0) || !(lr_d >= 0.0))
    fail_config("learning rates must be non-negative");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    fail_config("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail_config("train.adam_eps must be positive");
  if (log_every < 1) fail_config("train.log_every must be >= 1");
  if (checkpoint_every < 0 || eval_every < 0)
    fail_config("train.checkpoint_every and train.eval_every must be >= 0");
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
    fail_config("train.holdout_fraction must lie in [0, 1)");
  if (extractor.channels.empty()) fail_config("extractor.channels must be non-empty");
  for (int64_t c : extractor.channels)
    if (c < 1) fail_config("extractor.channels must be positive");
  const size_t layers = extractor.channels.size() + (extractor.include_input ? 1 : 0);
  if (!extractor.layer_weights.empty() && extractor.layer_weights.size() != layers)
    fail_config("extractor.layer_weights must be empty or have one entry per layer");
  if (maskgen.count < 0) fail_config("maskgen.count must be >= 0");
  maskgen::validate(maskgen.layout);
  maskgen::validate(maskgen.nucleus);
}

json config_to_json(const TrainConfig& cfg) {
  json j;
  j["net"] = {{"style_dim", cfg.net.style_dim},
              {"sian_embed", cfg.net.sian_embed},
              {"gen_channels", cfg.net.gen_channels},
              {"image_size", cfg.net.image_size},
              {"ndf", cfg.net.ndf},
              {"nef", cfg.net.nef},
              {"disc_scales", cfg.net.disc_scales},
              {"disc_layers", cfg.net.disc_layers},
              {"inst_on", cfg.net.inst_on},
              {"style_on", cfg.net.style_on},
              {"disc_sees_pq", cfg.net.disc_sees_pq},
              {"skip_sian", cfg.net.skip_sian},
              {"norm_eps", cfg.net.norm_eps}};
  j["loss"] = {{"lambda1", cfg.loss.lambda1},
               {"lambda2", cfg.loss.lambda2},
               {"lambda3", cfg.loss.lambda3},
               {"lambda4", cfg.loss.lambda4},
               {"reg_kind", cfg.reg_kind}};
  j["train"] = {{"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"lr_g", cfg.lr_g},
                {"lr_d", cfg.lr_d},
                {"beta1", cfg.beta1},
                {"beta2", cfg.beta2},
                {"adam_eps", cfg.adam_eps},
                {"seed", cfg.seed},
                {"log_every", cfg.log_every},
                {"checkpoint_every", cfg.checkpoint_every},
                {"eval_every", cfg.eval_every},
                {"holdout_fraction", cfg.holdout_fraction}};
  j["augment"] = {{"flip_h", cfg.augment.flip_h},
                  {"flip_v", cfg.augment.flip_v},
                  {"rot90", cfg.augment.rot90},
                  {"median_blur", cfg.augment.median_blur}};
  j["extractor"] = {{"seed", cfg.extractor.seed},
                    {"channels", cfg.extractor.channels},
                    {"include_input", cfg.extractor.include_input},
                    {"layer_weights", cfg.extractor.layer_weights}};
  j["maskgen"] = {{"count", cfg.maskgen.count},
                  {"layout",
                   {{"height", cfg.maskgen.layout.height},
                    {"width", cfg.maskgen.layout.width},
                    {"count_min", cfg.maskgen.layout.count_min},
                    {"count_max", cfg.maskgen.layout.count_max},
                    {"max_pairwise_overlap_fraction",
                     cfg.maskgen.layout.max_pairwise_overlap_fraction},
                    {"cluster_probability", cfg.maskgen.layout.cluster_probability},
                    {"cluster_spread", cfg.maskgen.layout.cluster_spread},
                    {"seed", cfg.maskgen.layout.seed}}},
                  {"nucleus",
                   {{"radius_min", cfg.maskgen.nucleus.radius_min},
                    {"radius_max", cfg.maskgen.nucleus.radius_max},
                    {"eccentricity_min", cfg.maskgen.nucleus.eccentricity_min},
                    {"eccentricity_max", cfg.maskgen.nucleus.eccentricity_max},
                    {"vertex_count", cfg.maskgen.nucleus.vertex_count},
                    {"radial_noise_amplitude", cfg.maskgen.nucleus.radial_noise_amplitude},
                    {"smoothing_passes", cfg.maskgen.nucleus.smoothing_passes}}}};
  return j;
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) fail_config("top level must be a JSON object");
  TrainConfig cfg;
  json work = j;

  if (json* s = subsection(&work, "net")) {
    Section sec(s, "net.");
    sec.get("style_dim", &cfg.net.style_dim);
    sec.get("sian_embed", &cfg.net.sian_embed);
    sec.get("gen_channels", &cfg.net.gen_channels);
    sec.get("image_size", &cfg.net.image_size);
    sec.get("ndf", &cfg.net.ndf);
    sec.get("nef", &cfg.net.nef);
    sec.get("disc_scales", &cfg.net.disc_scales);
    sec.get("disc_layers", &cfg.net.disc_layers);
    sec.get("inst_on", &cfg.net.inst_on);
    sec.get("style_on", &cfg.net.style_on);
    sec.get("disc_sees_pq", &cfg.net.disc_sees_pq);
    sec.get("skip_sian", &cfg.net.skip_sian);
    sec.get("norm_eps", &cfg.net.norm_eps);
    sec.finish();
    work.erase("net");
  }
  if (json* s = subsection(&work, "loss")) {
    Section sec(s, "loss.");
    sec.get("lambda1", &cfg.loss.lambda1);
    sec.get("lambda2", &cfg.loss.lambda2);
    sec.get("lambda3", &cfg.loss.lambda3);
    sec.get("lambda4", &cfg.loss.lambda4);
    sec.get("reg_kind", &cfg.reg_kind);
    sec.finish();
    work.erase("loss");
  }
  if (json* s = subsection(&work, "train")) {
    Section sec(s, "train.");
    sec.get("epochs", &cfg.epochs);
    sec.get("batch_size", &cfg.batch_size);
    sec.get("lr_g", &cfg.lr_g);
    sec.get("lr_d", &cfg.lr_d);
    sec.get("beta1", &cfg.beta1);
    sec.get("beta2", &cfg.beta2);
    sec.get("adam_eps", &cfg.adam_eps);
    sec.get("seed", &cfg.seed);
    sec.get("log_every", &cfg.log_every);
    sec.get("checkpoint_every", &cfg.checkpoint_every);
    sec.get("eval_every", &cfg.eval_every);
    sec.get("holdout_fraction", &cfg.holdout_fraction);
    sec.finish();
    work.erase("train");
  }
  if (json* s = subsection(&work, "augment")) {
    Section sec(s, "augment.");
    sec.get("flip_h", &cfg.augment.flip_h);
    sec.get("flip_v", &cfg.augment.flip_v);
    sec.get("rot90", &cfg.augment.rot90);
    sec.get("median_blur", &cfg.augment.median_blur);
    sec.finish();
    work.erase("augment");
  }
  if (json* s = subsection(&work, "extractor")) {
    Section sec(s, "extractor.");
    sec.get("seed", &cfg.extractor.seed);
    sec.get("channels", &cfg.extractor.channels);
    sec.get("include_input", &cfg.extractor.include_input);
    sec.get("layer_weights", &cfg.extractor.layer_weights);
    sec.finish();
    work.erase("extractor");
  }
  if (json* s = subsection(&work, "maskgen")) {
    if (json* layout = subsection(s, "layout")) {
      Section sec(layout, "maskgen.layout.");
      sec.get("height", &cfg.maskgen.layout.height);
      sec.get("width", &cfg.maskgen.layout.width);
      sec.get("count_min", &cfg.maskgen.layout.count_min);
      sec.get("count_max", &cfg.maskgen.layout.count_max);
      sec.get("max_pairwise_overlap_fraction",
              &cfg.maskgen.layout.max_pairwise_overlap_fraction);
      sec.get("cluster_probability", &cfg.maskgen.layout.cluster_probability);
      sec.get("cluster_spread", &cfg.maskgen.layout.cluster_spread);
      sec.get("seed", &cfg.maskgen.layout.seed);
      sec.finish();
      s->erase("layout");
    }
    if (json* nucleus = subsection(s, "nucleus")) {
      Section sec(nucleus, "maskgen.nucleus.");
      sec.get("radius_min", &cfg.maskgen.nucleus.radius_min);
      sec.get("radius_max", &cfg.maskgen.nucleus.radius_max);
      sec.get("eccentricity_min", &cfg.maskgen.nucleus.eccentricity_min);
      sec.get("eccentricity_max", &cfg.maskgen.nucleus.eccentricity_max);
      sec.get("vertex_count", &cfg.maskgen.nucleus.vertex_count);
      sec.get("radial_noise_amplitude", &cfg.maskgen.nucleus.radial_noise_amplitude);
      sec.get("smoothing_passes", &cfg.maskgen.nucleus.smoothing_passes);
      sec.finish();
      s->erase("nucleus");
    }
    Section sec(s, "maskgen.");
    sec.get("count", &cfg.maskgen.count);
    sec.finish();
    work.erase("maskgen");
  }
  for (auto it = work.begin(); it != work.end(); ++it)
    fail_config("unknown section '" + it.key() + "'");

  cfg.validate();
  return cfg;
}

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_config("cannot read config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail_config("cannot parse config file '" + path + "': " + e.what());
  }
  return j;
}

void apply_override(json* config, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    fail_config("override must look like section.key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json* node = config;
  std::istringstream keys(path);
  std::string key;
  std::vector<std::string> parts;
  while (std::getline(keys, key, '.')) {
    if (key.empty()) fail_config("override path '" + path + "' has an empty component");
    parts.push_back(key);
  }
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (!next.is_null() && !next.is_object())
      fail_config("override path '" + path + "' descends into a non-object");
    node = &next;
  }

  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;  // unparseable literals are strings
  (*node)[parts.back()] = value;
}

TrainConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json j = path.empty() ? json::object() : read_config_file(path);
  for (const auto& assignment : overrides) apply_override(&j, assignment);
  return config_from_json(j);
}

}  // namespace pipeline
}  // namespace sian
