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

// Downstream utility study: does adding synthesized images to a nucleus
// segmenter's training set help? Instance masks are recast as a 3-class
// pixel task (background / interior / boundary), a compact encoder-decoder
// is trained on three nested training sets (real; real + classic
// augmentation; real + classic + synthetic), and each variant is scored
// with pooled DQ/SQ/PQ on held-out real patches.

#ifndef SIAN_DOWNSTREAM_DOWNSTREAM_HPP_
#define SIAN_DOWNSTREAM_DOWNSTREAM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sian/core/optim.hpp"
#include "sian/maskgen/maskgen.hpp"
#include "sian/net/layers.hpp"
#include "sian/pipeline/dataset.hpp"

namespace sian {
namespace downstream {

// Pixel classes of the auxiliary segmentation task.
enum SegClass : int32_t { kBackground = 0, kInterior = 1, kBoundary = 2 };

// [H,W] class grid: an instance pixel whose 4-neighborhood contains a
// different label, background, or the image border is boundary; every other
// instance pixel is interior. Background stays background, so
// interior + boundary exactly partitions the instance support.
Array<int32_t> masks_to_seg_targets(const featurize::InstanceMask& inst);

// Approximate inverse: 4-connected components of the interior class become
// instances (numbered 1..K in raster discovery order), then each grows one
// step into the boundary class. Interior pixels claim their 4-adjacent
// boundary pixels in raster order (neighbors checked N, W, E, S); the first
// claim wins. Boundary pixels no interior touches are dropped.
featurize::InstanceMask instances_from_seg(const Array<int32_t>& classes);

// Compact encoder-decoder pixel classifier: two stride-2 descent levels,
// instance normalization, LeakyReLU, nearest-neighbor upsampling back to
// full resolution, and a 1x1 head producing 3 logit channels.
class Segmenter {
 public:
  Segmenter(uint64_t seed, int64_t base_filters);

  // [N,3,H,W] -> [N,3,H,W] logits; H and W must be multiples of 4.
  Var<float> forward(Var<float> image) const;

  // [3,H,W] -> [H,W] argmax class grid (ties to the lower class index).
  Array<int32_t> predict(const Array<float>& image) const;

  net::NamedVars<float> params() const;

 private:
  net::Conv2dLayer<float> enc1_, down1_, down2_, up1_, up2_, head_;
};

struct ExperimentConfig {
  int64_t synthetic_count = 8;  // generator images added in the third row
  int64_t classic_copies = 1;   // augmented copies per real item in rows 2-3
  int64_t seg_epochs = 4;
  int64_t seg_batch = 8;
  double seg_lr = 1e-3;
  int64_t seg_filters = 8;
  double holdout_fraction = 0.25;  // real sources held out for scoring
  uint64_t seed = 0;
  // Layout recipe for the synthetic masks; height/width are overridden by
  // the checkpoint's training resolution.
  maskgen::LayoutParams layout;
  maskgen::NucleusPolygonParams nucleus;
};

struct ExperimentRow {
  std::string name;
  double dq = 0;
  double sq = 0;
  double pq = 0;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;  // real / real+classic / real+classic+synthetic
  int64_t train_items = 0;          // real patches in the first row
  int64_t holdout_items = 0;        // patches scored against
};

// Runs the three-way comparison. Every segmenter starts from the same seed,
// so the rows differ only through their training data; with
// synthetic_count == 0 the last two rows are identical by construction.
// Throws std::invalid_argument when the checkpoint path does not exist, the
// items do not match its resolution, or the holdout would be empty.
ExperimentReport run_augmentation_experiment(const std::vector<pipeline::DatasetItem>& items,
                                             const std::string& checkpoint_path,
                                             const ExperimentConfig& cfg);

// "training_set,dq,sq,pq" rows, and an aligned human-readable table.
std::string experiment_to_csv(const ExperimentReport& report);
std::string experiment_to_text(const ExperimentReport& report);

}  // namespace downstream
}  // namespace sian

#endif  // SIAN_DOWNSTREAM_DOWNSTREAM_HPP_
