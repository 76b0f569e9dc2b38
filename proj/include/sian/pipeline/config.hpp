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

// Run configuration: everything a training or synthesis run needs, grouped
// into sections (net / loss / train / augment / extractor / maskgen) and
// serialized as JSON. Any field is addressable with a dotted path like
// "train.lr_g=0.001" for command-line overrides. Unknown keys are rejected
// so typos fail loudly instead of silently using a default.

#ifndef SIAN_PIPELINE_CONFIG_HPP_
#define SIAN_PIPELINE_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sian/losses/losses.hpp"
#include "sian/maskgen/maskgen.hpp"
#include "sian/net/config.hpp"

namespace sian {
namespace pipeline {

// Per-op switches for classic augmentation. Enabled flips and the median
// blur fire with probability 1/2 each; an enabled rotation draws a quarter
// turn count uniformly from {0,1,2,3}.
struct AugmentToggles {
  bool flip_h = true;
  bool flip_v = true;
  bool rot90 = true;
  bool median_blur = true;

  bool any() const { return flip_h || flip_v || rot90 || median_blur; }
};

// Frozen random-feature extractor used for the perceptual loss and the
// FID embedding.
struct ExtractorConfig {
  uint64_t seed = 7;
  std::vector<int64_t> channels = {16, 32, 64};
  bool include_input = true;
  std::vector<double> layer_weights;  // empty = all ones
};

struct MaskgenConfig {
  maskgen::LayoutParams layout;
  maskgen::NucleusPolygonParams nucleus;
  int64_t count = 8;
};

struct TrainConfig {
  net::NetConfig net;
  losses::LossWeights loss;
  std::string reg_kind = "none";

  int64_t epochs = 50;
  int64_t batch_size = 8;
  double lr_g = 1e-4;
  double lr_d = 4e-4;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  int64_t log_every = 1;
  int64_t checkpoint_every = 0;   // 0 = final checkpoint only
  int64_t eval_every = 0;         // 0 = no periodic evaluation
  double holdout_fraction = 0.0;  // fraction of source images held out

  AugmentToggles augment;
  ExtractorConfig extractor;
  MaskgenConfig maskgen;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Full round trip; config_from_json starts from defaults and overlays the
// given keys, rejecting any it does not recognize.
nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

// Reads and parses a JSON config file. A missing or unreadable file throws
// std::invalid_argument naming the path.
nlohmann::json read_config_file(const std::string& path);

// Applies one "dotted.path=value" override in place. The value is parsed as
// a JSON literal (number, bool, array, ...) when possible and treated as a
// string otherwise. Throws std::invalid_argument on a malformed assignment.
void apply_override(nlohmann::json* config, const std::string& assignment);

// Convenience: file (or empty object when path is empty) + overrides,
// parsed and validated.
TrainConfig load_config(const std::string& path,
                        const std::vector<std::string>& overrides = {});

}  // namespace pipeline
}  // namespace sian

#endif  // SIAN_PIPELINE_CONFIG_HPP_
