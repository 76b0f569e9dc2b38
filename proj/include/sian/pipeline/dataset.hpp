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

// Dataset ingestion and classic augmentation. A source directory holds
// paired RGB image / 16-bit instance-mask PNGs listed in manifest.jsonl
// (one {"image","mask","organ"} object per line). Images are cut into a
// non-overlapping grid of training patches, mirror-padding the remainder,
// and each patch's mask is re-labeled so the 1..K contiguity and
// 4-connectivity invariants hold again after cropping.

#ifndef SIAN_PIPELINE_DATASET_HPP_
#define SIAN_PIPELINE_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sian/core/array.hpp"
#include "sian/core/rng.hpp"
#include "sian/featurize/featurize.hpp"
#include "sian/net/config.hpp"
#include "sian/net/sian_block.hpp"
#include "sian/pipeline/config.hpp"

namespace sian {
namespace pipeline {

struct DatasetItem {
  Array<float> image;            // [3, S, S] in [-1, 1]
  featurize::InstanceMask inst;  // [S, S], labels 1..K
  std::string organ;
  std::string source_id;         // source image file stem
  int64_t patch_index = 0;       // row-major patch position within the source
};

struct IngestIssue {
  std::string file;
  std::string message;
};

// Loading is best-effort: entries that fail (missing file, decode error,
// image/mask size mismatch, invalid labels) are reported in `errors` and
// skipped while the remaining entries still load.
struct IngestResult {
  std::vector<DatasetItem> items;
  std::vector<IngestIssue> errors;
  std::vector<std::string> warnings;
};

// Reads manifest.jsonl from `dir` and patchifies every pair to
// patch_size x patch_size. A directory without a manifest yields an empty
// item list plus a warning. Throws std::invalid_argument if `dir` is not a
// directory or patch_size < 1.
IngestResult ingest(const std::string& dir, int64_t patch_size);

// Edge-inclusive mirror reflection: 0..n-1 maps to itself, n..2n-1 runs
// backwards (abcd -> abcd|dcba), periodic beyond.
int64_t mirror_index(int64_t i, int64_t n);

// Splits labels whose pixels became 4-disconnected (e.g. by cropping) into
// one instance per connected part and renumbers everything to 1..K in
// row-major discovery order.
featurize::InstanceMask split_same_label_components(const featurize::InstanceMask& inst);

// Deterministic geometric core shared by augment(): horizontal flip, then
// vertical flip, then `quarter_turns` 90-degree rotations, applied
// identically to the image and the mask. Condition maps are not transformed
// here; they are recomputed from the mask afterwards.
DatasetItem apply_geometric(const DatasetItem& item, bool flip_h, bool flip_v,
                            int quarter_turns);

// 3x3 median filter per channel with replicated borders; image-only.
Array<float> median_blur3(const Array<float>& img);

// Samples one augmentation: enabled flips and blur fire with probability
// 1/2, an enabled rotation draws uniformly from {0,1,2,3} quarter turns.
// Draw order is flip_h, flip_v, rot90, blur.
DatasetItem augment(const DatasetItem& item, Rng& rng, const AugmentToggles& toggles);

// Holds out whole source images (never individual patches): the distinct
// source ids are shuffled with `seed` and ceil(fraction * count) of them
// form the holdout. With fewer than two sources everything stays in train.
struct SplitResult {
  std::vector<DatasetItem> train;
  std::vector<DatasetItem> holdout;
};
SplitResult split_by_source(const std::vector<DatasetItem>& items, double fraction,
                            uint64_t seed);

// Batched condition tensors: the coarse-to-fine pyramid for the generator
// plus the native full-resolution maps for the discriminator.
struct CondBatch {
  std::vector<net::CondLevel<float>> pyramid;  // one level per generator block
  net::CondLevel<float> native;                // [N, ., S, S]
};
CondBatch featurize_masks(const std::vector<featurize::InstanceMask>& masks,
                          const net::NetConfig& cfg);

// Batched network inputs for a list of items.
struct BatchTensors {
  Array<float> images;  // [N, 3, S, S]
  CondBatch cond;
};
BatchTensors make_batch(const std::vector<DatasetItem>& items, const net::NetConfig& cfg);

}  // namespace pipeline
}  // namespace sian

#endif  // SIAN_PIPELINE_DATASET_HPP_
