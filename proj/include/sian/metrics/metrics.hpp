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

#ifndef SIAN_METRICS_METRICS_HPP_
#define SIAN_METRICS_METRICS_HPP_

#include <map>
#include <string>
#include <vector>

#include "sian/core/array.hpp"
#include "sian/featurize/featurize.hpp"
#include "sian/net/extractor.hpp"

namespace sian {
namespace metrics {

// Mean local structural similarity of two [C,H,W] images with values in
// [0, dynamic_range]. Uses the canonical 11x11 Gaussian window (sigma 1.5),
// C1 = (0.01 L)^2, C2 = (0.03 L)^2, restricted to fully-covered windows
// (a 5-pixel crop on every side) and averaged over channels. Computed in
// double precision; identical inputs give exactly 1.
double ssim(const Array<double>& x, const Array<double>& y,
            double dynamic_range = 1.0);

// Sample mean and unbiased covariance of row-vector embeddings [N,D], N >= 2.
struct GaussStats {
  Array<double> mean;  // [D]
  Array<double> cov;   // [D,D]
};

GaussStats gauss_stats(const Array<double>& embeddings);

// Frechet distance between two Gaussians:
// |m_a - m_b|^2 + tr(C_a + C_b - 2 (C_a C_b)^{1/2}).
// The matrix square root uses symmetric eigendecomposition; eigenvalues in
// [-1e-8, 0) are clamped to zero, anything more negative is rejected.
double fid(const GaussStats& a, const GaussStats& b);

// Embeds a list of equally-shaped [3,H,W] images (generator value range)
// and returns their Gaussian statistics.
GaussStats embed_set(const std::vector<Array<float>>& images,
                     const net::FeatureExtractor<float>& extractor);

// Instance matching at the panoptic IoU > 0.5 criterion. That threshold
// makes the matching unique: a ground-truth instance can overlap at most one
// prediction with IoU above one half, and vice versa.
struct MatchedPair {
  int32_t gt_id = 0;
  int32_t pred_id = 0;
  double iou = 0;
};

struct Matching {
  std::vector<MatchedPair> pairs;        // sorted by gt_id
  std::vector<int32_t> unmatched_gt;     // ascending
  std::vector<int32_t> unmatched_pred;   // ascending
};

Matching match_instances(const featurize::InstanceMask& gt,
                         const featurize::InstanceMask& pred);

struct PqResult {
  double dq = 0;
  double sq = 0;
  double pq = 0;
};

// DQ = TP / (TP + FP/2 + FN/2); SQ = mean IoU over matched pairs (zero when
// none); PQ = DQ * SQ. A matching with no instances on either side scores
// (1,1,1) by convention.
PqResult pq_metrics(const Matching& matching);

// Pools TP/FP/FN counts and matched IoUs across many mask pairs; the
// panoptic convention aggregates counts over the whole set rather than
// averaging per-image scores.
struct PqAccumulator {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  double iou_sum = 0;

  void add(const Matching& matching);
  PqResult result() const;
  bool empty() const { return tp == 0 && fp == 0 && fn == 0; }
};

struct MetricReport {
  double fid = 0;
  double ssim = 0;
  double dq = 0;
  double sq = 0;
  double pq = 0;
  std::map<std::string, double> per_organ_fid;
  std::string extractor_id;
  // True when the (1,1,1) all-empty convention decided the PQ family.
  bool empty_convention = false;
};

// Full evaluation: pairwise SSIM (averaged), FID between the real and fake
// embedding distributions (globally and per organ tag), and pooled
// DQ/SQ/PQ between ground-truth and predicted instance masks. Images are
// [3,H,W] in [-1,1]; `organ_tags` is either empty or one tag per image.
MetricReport evaluate_sets(const std::vector<Array<float>>& real_images,
                           const std::vector<Array<float>>& fake_images,
                           const std::vector<featurize::InstanceMask>& gt_masks,
                           const std::vector<featurize::InstanceMask>& pred_masks,
                           const std::vector<std::string>& organ_tags,
                           const net::FeatureExtractor<float>& extractor);

// JSON-compatible tree and flat CSV (one row for the whole set plus one per
// organ) for tabulation.
std::string report_to_json(const MetricReport& report);
std::string report_to_csv(const MetricReport& report);

}  // namespace metrics
}  // namespace sian

#endif  // SIAN_METRICS_METRICS_HPP_
