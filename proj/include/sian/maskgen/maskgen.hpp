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

// Synthetic nucleus-mask generation: perturbed-ellipse polygons placed with
// controllable density, clustering, and pairwise-overlap limits.

#ifndef SIAN_MASKGEN_MASKGEN_HPP_
#define SIAN_MASKGEN_MASKGEN_HPP_

#include <string>
#include <vector>

#include "sian/core/rng.hpp"
#include "sian/featurize/featurize.hpp"

namespace sian {
namespace maskgen {

struct NucleusPolygonParams {
  double radius_min = 4.0;
  double radius_max = 12.0;
  double eccentricity_min = 0.0;
  double eccentricity_max = 0.6;
  int vertex_count = 24;
  double radial_noise_amplitude = 0.25;  // fraction of radius, in [0, 0.5]
  int smoothing_passes = 2;
};

struct LayoutParams {
  int64_t height = 256;
  int64_t width = 256;
  int64_t count_min = 60;
  int64_t count_max = 120;
  double max_pairwise_overlap_fraction = 0.3;
  double cluster_probability = 0.5;
  double cluster_spread = 6.0;
  uint64_t seed = 0;
};

void validate(const NucleusPolygonParams& p);
void validate(const LayoutParams& p);

// Closed polygon centered at the origin; vertex k connects to k+1 (mod n).
struct Polygon {
  std::vector<double> xs, ys;
};

// Ellipse with sampled size, eccentricity, and rotation, perturbed radially
// by smoothed noise. The semi-minor axis is kept >= radius_min so every
// vertex radius stays inside [radius_min*(1-0.5), radius_max*(1+0.5)]
// whatever eccentricity was drawn. Radial star polygons around the origin are
// simple by construction; the intersection check and unperturbed-ellipse
// fallback guard the documented contract anyway.
Polygon sample_nucleus_polygon(Rng& rng, const NucleusPolygonParams& params);

// True if any two non-adjacent edges intersect.
bool polygon_self_intersects(const Polygon& poly);

// Pixel-center even-odd rasterization, clipped to the canvas.
// Returns row-major pixel indices, strictly increasing.
std::vector<int64_t> rasterize_polygon(const Polygon& poly, double cx,
                                       double cy, int64_t height,
                                       int64_t width);

struct MaskResult {
  featurize::InstanceMask mask;
  int64_t requested = 0;  // sampled target nucleus count
  int64_t placed = 0;     // polygons that passed the overlap test
  bool complete() const { return placed == requested; }
};

// Places polygons one by one; a candidate is rejected when its pixel overlap
// with any placed polygon exceeds max_pairwise_overlap_fraction of the
// smaller one's pixel count. Later placements claim contested pixels, and
// fragments left by overwriting are split into their own labels so the
// result always satisfies the 4-connectivity invariant. Gives up after
// 100 * requested placement attempts and returns what fit.
MaskResult generate_instance_mask(Rng& rng, const LayoutParams& layout,
                                  const NucleusPolygonParams& nucleus);

struct ManifestEntry {
  std::string file;
  uint64_t seed = 0;
  int64_t instances = 0;
  int64_t requested = 0;
};

// Writes n masks (mask_00000.png, ...) plus manifest.jsonl into out_dir.
// Mask i uses the derived seed mix(layout.seed, i), so any prefix of a larger
// dataset is reproducible independently. On failure every file created so
// far is removed before the error propagates.
std::vector<ManifestEntry> generate_mask_dataset(
    int64_t n, const LayoutParams& layout, const NucleusPolygonParams& nucleus,
    const std::string& out_dir);

}  // namespace maskgen
}  // namespace sian

#endif  // SIAN_MASKGEN_MASKGEN_HPP_
