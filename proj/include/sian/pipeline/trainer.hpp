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

// Training driver. One step runs a discriminator hinge update followed by a
// generator+encoder update on the same generator output; the fake batch is
// produced by a single generator forward pass and the discriminator is
// frozen (via set_requires_grad) while generator gradients flow through it.
// Every random draw comes from an owned, serialized stream, so a run is
// bit-reproducible and a resumed run continues the interrupted one exactly.

#ifndef SIAN_PIPELINE_TRAINER_HPP_
#define SIAN_PIPELINE_TRAINER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sian/core/optim.hpp"
#include "sian/losses/losses.hpp"
#include "sian/metrics/metrics.hpp"
#include "sian/net/discriminator.hpp"
#include "sian/net/encoder.hpp"
#include "sian/net/extractor.hpp"
#include "sian/net/generator.hpp"
#include "sian/pipeline/dataset.hpp"

namespace sian {
namespace pipeline {

class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // Restores configuration, weights, optimizer moments, and rng streams.
  static Trainer from_checkpoint(const std::string& path);

  // One optimization step on an explicit batch. Throws std::runtime_error
  // naming the offending loss term if any objective goes non-finite.
  losses::LossReport train_step(const std::vector<DatasetItem>& batch);

  // Epoch loop: shuffles per epoch, augments per item, appends one JSON line
  // per logged step to <out_dir>/train_log.jsonl, writes periodic
  // checkpoint_<step>.bin files and a final checkpoint_final.bin. With
  // epochs == 0 the final checkpoint holds the untouched initialization.
  void fit(const std::vector<DatasetItem>& items, const std::string& out_dir);

  // Renders the mask under the style encoded from `style_image` (the
  // posterior mean; `sample_style` draws from the posterior instead).
  // Returns [3, S, S]. Throws std::invalid_argument naming the expected
  // size when the mask or style image is not S x S.
  Array<float> synthesize(const featurize::InstanceMask& inst,
                          const Array<float>& style_image, bool sample_style = false);

  // Same, from an explicit style vector of length net.style_dim.
  Array<float> synthesize_with_style(const featurize::InstanceMask& inst,
                                     const Array<float>& style);

  // Synthesis quality of a held-out split: each item is re-rendered in its
  // own encoded style and compared against its real patch. Needs >= 2 items.
  metrics::MetricReport evaluate(const std::vector<DatasetItem>& holdout);

  void save(const std::string& path);

  // Restarts the posterior-sampling stream, detaching style draws from the
  // training history recorded in the checkpoint.
  void reseed_style_stream(uint64_t seed) { eps_rng_.reseed(seed); }

  uint64_t step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  const net::FeatureExtractor<float>& extractor() const { return extractor_; }

  // Every learnable parameter (generator, encoder, discriminator) under its
  // canonical name. The Vars share storage with the live networks.
  const net::NamedVars<float>& named_params() const { return all_named_; }

 private:
  void check_params_finite() const;

  TrainConfig cfg_;
  net::Generator<float> gen_;
  net::Encoder<float> enc_;
  net::Discriminator<float> disc_;
  net::FeatureExtractor<float> extractor_;
  losses::RegKind reg_kind_;

  net::NamedVars<float> gen_named_;  // generator only (regularizer target)
  net::NamedVars<float> g_named_;    // generator + encoder, optimizer order
  net::NamedVars<float> d_named_;    // discriminator, optimizer order
  net::NamedVars<float> all_named_;

  Adam<float> opt_g_;
  Adam<float> opt_d_;
  Rng eps_rng_;
  uint64_t step_ = 0;
  int64_t epoch_ = 0;
};

}  // namespace pipeline
}  // namespace sian

#endif  // SIAN_PIPELINE_TRAINER_HPP_
