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

// Instance-mask featurization: the semantic one-hot map M, the direction
// map P (unit vectors toward instance centroids), and the normalized
// interior distance map Q (medial-axis ridge = 1), plus the multi-scale
// pyramid consumed by the generator.

#ifndef SIAN_FEATURIZE_FEATURIZE_HPP_
#define SIAN_FEATURIZE_FEATURIZE_HPP_

#include <string>
#include <utility>
#include <vector>

#include "sian/core/array.hpp"

namespace sian {
namespace featurize {

// Label grid [H, W]; 0 is background, instance ids are 1..K.
using InstanceMask = Array<int32_t>;

struct ConditionMaps {
  Array<float> semantic;   // [2, H, W] one-hot (background, nucleus)
  Array<float> direction;  // [2, H, W] (dx, dy), unit norm at nucleus pixels
  Array<float> distance;   // [1, H, W] in [0, 1], per-instance max = 1
};

// One-hot background/nucleus channels.
Array<float> semantic_map(const InstanceMask& inst);

// Unit vector from each nucleus pixel toward its instance centroid
// (x rightward, y downward). Zero at background. Zero at the pixel the
// centroid falls into, decided by a strict Chebyshev test
// max(|cx-px|, |cy-py|) < 0.5 so exact half-integer centroids (which sit on
// pixel borders) claim no pixel and geometric equivariance is preserved.
Array<float> direction_map(const InstanceMask& inst);

// Per-instance exact Euclidean distance to the instance complement,
// normalized by the instance's maximum. Pixels beyond the image border count
// as complement, so an instance touching the border is treated exactly like
// one bounded by background.
Array<float> distance_map(const InstanceMask& inst);

ConditionMaps featurize(const InstanceMask& inst);

// Downsamples maps to each requested dyadic size: M by nearest neighbor
// (one-hot preserved), P and Q by 2x2 area mean. Sizes must be powers-of-two
// fractions of the native size, given coarsest-first or finest-first; levels
// are returned in the order requested.
std::vector<ConditionMaps> build_condition_pyramid(
    const ConditionMaps& maps, const std::vector<std::pair<int64_t, int64_t>>& target_sizes);

// Validation used by ingestion: every positive id must form one 4-connected
// region. Returns human-readable problems; empty means valid.
std::vector<std::string> validate_mask(const InstanceMask& inst);

// Renumbers instance ids to 1..K in row-major first-appearance order.
InstanceMask relabel_compact(const InstanceMask& inst);

// 4-connected components of the nonzero support, labeled 1..K in row-major
// discovery order (labels of the input are ignored beyond zero/nonzero).
InstanceMask connected_components_4(const InstanceMask& inst);

}  // namespace featurize
}  // namespace sian

#endif  // SIAN_FEATURIZE_FEATURIZE_HPP_
