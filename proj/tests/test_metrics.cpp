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

#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "sian/metrics/metrics.hpp"
#include "support/random_masks.hpp"

using sian::Array;
using sian::Rng;
namespace metrics = sian::metrics;
using sian::featurize::InstanceMask;

namespace {

Array<double> random_image(Rng& rng, int64_t c, int64_t h, int64_t w) {
  Array<double> img({c, h, w});
  for (int64_t i = 0; i < img.size(); ++i) img[i] = rng.uniform();
  return img;
}

// Exhaustive IoU search over every (gt, pred) label pair.
metrics::Matching brute_matching(const InstanceMask& gt,
                                 const InstanceMask& pred) {
  std::set<int32_t> gt_ids, pred_ids;
  for (int64_t i = 0; i < gt.size(); ++i) {
    if (gt[i] != 0) gt_ids.insert(gt[i]);
    if (pred[i] != 0) pred_ids.insert(pred[i]);
  }
  metrics::Matching out;
  std::set<int32_t> used_pred;
  for (int32_t g : gt_ids) {
    bool matched = false;
    for (int32_t p : pred_ids) {
      int64_t inter = 0, ga = 0, pa = 0;
      for (int64_t i = 0; i < gt.size(); ++i) {
        const bool in_g = gt[i] == g, in_p = pred[i] == p;
        ga += in_g;
        pa += in_p;
        inter += in_g && in_p;
      }
      const double iou =
          static_cast<double>(inter) / static_cast<double>(ga + pa - inter);
      if (iou > 0.5) {
        out.pairs.push_back({g, p, iou});
        used_pred.insert(p);
        matched = true;
      }
    }
    if (!matched) out.unmatched_gt.push_back(g);
  }
  for (int32_t p : pred_ids)
    if (!used_pred.count(p)) out.unmatched_pred.push_back(p);
  return out;
}

}  // namespace

TEST_CASE("ssim: exact identity, closed forms, symmetry, bounds") {
  Rng rng(3);
  Array<double> x = random_image(rng, 3, 24, 24);
  CHECK(metrics::ssim(x, x) == 1.0);

  // Constant images c1 vs c2: all variances vanish, so the index reduces to
  // (2 c1 c2 + C1) / (c1^2 + c2^2 + C1).
  const double c1 = 1e-4;
  auto const_pair = [&](double a, double b) {
    return metrics::ssim(Array<double>::full({1, 16, 16}, a),
                         Array<double>::full({1, 16, 16}, b));
  };
  CHECK(const_pair(0.0, 1.0) ==
        doctest::Approx(c1 / (1.0 + c1)).epsilon(1e-9));
  CHECK(const_pair(0.3, 0.7) ==
        doctest::Approx((2 * 0.3 * 0.7 + c1) / (0.09 + 0.49 + c1))
            .epsilon(1e-9));

  Array<double> y = random_image(rng, 3, 24, 24);
  CHECK(metrics::ssim(x, y) == metrics::ssim(y, x));

  for (int t = 0; t < 10; ++t) {
    Array<double> a = random_image(rng, 1, 16, 16);
    Array<double> b = random_image(rng, 1, 16, 16);
    const double v = metrics::ssim(a, b);
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }

  CHECK_THROWS_AS(metrics::ssim(x, random_image(rng, 3, 16, 16)),
                  std::invalid_argument);
  CHECK_THROWS_AS(metrics::ssim(random_image(rng, 1, 8, 8),
                                random_image(rng, 1, 8, 8)),
                  std::invalid_argument);
}

TEST_CASE("gauss_stats: hand-checked mean and unbiased covariance") {
  Array<double> x = Array<double>::from({3, 2}, {1, 2, 3, 4, 5, 9});
  metrics::GaussStats stats = metrics::gauss_stats(x);
  CHECK(stats.mean[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(stats.mean[1] == doctest::Approx(5.0).epsilon(1e-12));
  // Unbiased: sum of squared deviations over N-1 = 2.
  CHECK(stats.cov.at(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(stats.cov.at(1, 1) == doctest::Approx(13.0).epsilon(1e-12));
  CHECK(stats.cov.at(0, 1) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(stats.cov.at(1, 0) == stats.cov.at(0, 1));
  CHECK_THROWS_AS(metrics::gauss_stats(Array<double>::zeros({1, 4})),
                  std::invalid_argument);
}

TEST_CASE("fid: closed forms, symmetry, non-negativity") {
  Rng rng(5);
  Array<double> x({64, 6});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
  metrics::GaussStats a = metrics::gauss_stats(x);
  CHECK(std::abs(metrics::fid(a, a)) < 1e-6);

  // Equal covariances: the trace terms cancel, leaving the mean distance.
  metrics::GaussStats shifted = a;
  shifted.mean = a.mean.clone();
  double d2 = 0;
  for (int64_t i = 0; i < shifted.mean.size(); ++i) {
    shifted.mean[i] += 0.1 * (i + 1);
    const double d = 0.1 * (i + 1);
    d2 += d * d;
  }
  CHECK(metrics::fid(a, shifted) == doctest::Approx(d2).epsilon(1e-6));

  // Commuting diagonal covariances: sum of squared sqrt differences.
  metrics::GaussStats da, db;
  da.mean = Array<double>::zeros({3});
  db.mean = Array<double>::zeros({3});
  da.cov = Array<double>::zeros({3, 3});
  db.cov = Array<double>::zeros({3, 3});
  const double av[3] = {1.0, 4.0, 9.0}, bv[3] = {4.0, 1.0, 16.0};
  double expected = 0;
  for (int i = 0; i < 3; ++i) {
    da.cov.at(i, i) = av[i];
    db.cov.at(i, i) = bv[i];
    const double diff = std::sqrt(av[i]) - std::sqrt(bv[i]);
    expected += diff * diff;
  }
  CHECK(metrics::fid(da, db) == doctest::Approx(expected).epsilon(1e-6));

  Array<double> y({64, 6});
  for (int64_t i = 0; i < y.size(); ++i) y[i] = rng.normal() * 1.3 + 0.2;
  metrics::GaussStats b = metrics::gauss_stats(y);
  const double ab = metrics::fid(a, b);
  CHECK(std::abs(ab - metrics::fid(b, a)) < 1e-6);
  CHECK(ab > -1e-6);

  metrics::GaussStats wrong;
  wrong.mean = Array<double>::zeros({4});
  wrong.cov = Array<double>::zeros({4, 4});
  CHECK_THROWS_AS(metrics::fid(a, wrong), std::invalid_argument);
}

TEST_CASE("match_instances: hand cases and exhaustive oracle") {
  // Identical masks: every instance matches itself at IoU 1.
  Rng rng(7);
  InstanceMask mask = sian::testing::random_instance_mask(rng, 16, 16, 5, 20);
  metrics::Matching self = metrics::match_instances(mask, mask);
  std::set<int32_t> ids;
  for (int64_t i = 0; i < mask.size(); ++i)
    if (mask[i] != 0) ids.insert(mask[i]);
  CHECK(self.pairs.size() == ids.size());
  for (const auto& pair : self.pairs) {
    CHECK(pair.gt_id == pair.pred_id);
    CHECK(pair.iou == 1.0);
  }
  CHECK(self.unmatched_gt.empty());
  CHECK(self.unmatched_pred.empty());

  // 10x10 squares offset by 5 columns: IoU 50/150 = 1/3, below threshold.
  InstanceMask gt = Array<int32_t>::zeros({20, 20});
  InstanceMask pred = Array<int32_t>::zeros({20, 20});
  for (int64_t y = 0; y < 10; ++y)
    for (int64_t x = 0; x < 10; ++x) {
      gt.at(y, x) = 1;
      pred.at(y, x + 5) = 1;
    }
  metrics::Matching shifted = metrics::match_instances(gt, pred);
  CHECK(shifted.pairs.empty());
  CHECK(shifted.unmatched_gt == std::vector<int32_t>{1});
  CHECK(shifted.unmatched_pred == std::vector<int32_t>{1});

  // 200 random mask pairs against the exhaustive pair search.
  for (int trial = 0; trial < 200; ++trial) {
    InstanceMask a = sian::testing::random_instance_mask(rng, 16, 16, 5, 25);
    InstanceMask b = sian::testing::random_instance_mask(rng, 16, 16, 5, 25);
    metrics::Matching fast = metrics::match_instances(a, b);
    metrics::Matching brute = brute_matching(a, b);
    REQUIRE(fast.pairs.size() == brute.pairs.size());
    for (size_t i = 0; i < fast.pairs.size(); ++i) {
      CHECK(fast.pairs[i].gt_id == brute.pairs[i].gt_id);
      CHECK(fast.pairs[i].pred_id == brute.pairs[i].pred_id);
      CHECK(fast.pairs[i].iou ==
            doctest::Approx(brute.pairs[i].iou).epsilon(1e-12));
    }
    CHECK(fast.unmatched_gt == brute.unmatched_gt);
    CHECK(fast.unmatched_pred == brute.unmatched_pred);
  }
}

TEST_CASE("pq_metrics: formula arithmetic and conventions") {
  metrics::Matching perfect;
  perfect.pairs = {{1, 1, 1.0}, {2, 2, 1.0}};
  metrics::PqResult r = metrics::pq_metrics(perfect);
  CHECK(r.dq == 1.0);
  CHECK(r.sq == 1.0);
  CHECK(r.pq == 1.0);

  // One exact match, one miss: DQ = 1 / 1.5.
  metrics::Matching missed;
  missed.pairs = {{1, 1, 1.0}};
  missed.unmatched_gt = {2};
  r = metrics::pq_metrics(missed);
  CHECK(r.dq == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.sq == 1.0);
  CHECK(r.pq == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // One match at IoU 0.8 plus one false positive.
  metrics::Matching noisy;
  noisy.pairs = {{1, 2, 0.8}};
  noisy.unmatched_pred = {3};
  r = metrics::pq_metrics(noisy);
  CHECK(r.dq == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.sq == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.pq == doctest::Approx(0.8 * 2.0 / 3.0).epsilon(1e-12));

  // Both sides empty scores perfect by convention.
  r = metrics::pq_metrics(metrics::Matching{});
  CHECK(r.dq == 1.0);
  CHECK(r.sq == 1.0);
  CHECK(r.pq == 1.0);

  // All TPs missing but FPs present: SQ defined as zero.
  metrics::Matching only_fp;
  only_fp.unmatched_pred = {1, 2};
  r = metrics::pq_metrics(only_fp);
  CHECK(r.dq == 0.0);
  CHECK(r.sq == 0.0);
  CHECK(r.pq == 0.0);

  // PQ = DQ * SQ on random matchings.
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    metrics::Matching m;
    const int64_t tp = rng.uniform_int(0, 5);
    for (int64_t i = 0; i < tp; ++i)
      m.pairs.push_back({static_cast<int32_t>(i + 1),
                         static_cast<int32_t>(i + 1),
                         rng.uniform(0.5, 1.0)});
    for (int64_t i = 0; i < rng.uniform_int(0, 4); ++i)
      m.unmatched_gt.push_back(static_cast<int32_t>(100 + i));
    for (int64_t i = 0; i < rng.uniform_int(0, 4); ++i)
      m.unmatched_pred.push_back(static_cast<int32_t>(200 + i));
    r = metrics::pq_metrics(m);
    CHECK(r.pq == doctest::Approx(r.dq * r.sq).epsilon(1e-9));
  }
}

TEST_CASE("evaluate_sets: end-to-end report") {
  Rng rng(13);
  sian::net::FeatureExtractor<float> ext(17, {8, 16}, true);

  std::vector<Array<float>> real, fake;
  std::vector<InstanceMask> gt, pred;
  std::vector<std::string> organs = {"breast", "breast", "kidney", "kidney"};
  for (int i = 0; i < 4; ++i) {
    Array<float> img({3, 16, 16});
    for (int64_t j = 0; j < img.size(); ++j)
      img[j] = static_cast<float>(rng.uniform(-1.0, 1.0));
    real.push_back(img);
    fake.push_back(img.clone());
    InstanceMask mask = sian::testing::random_instance_mask(rng, 16, 16, 4, 15);
    gt.push_back(mask);
    pred.push_back(mask.clone());
  }

  metrics::MetricReport report =
      metrics::evaluate_sets(real, fake, gt, pred, organs, ext);
  CHECK(report.ssim == 1.0);
  CHECK(std::abs(report.fid) < 1e-6);
  CHECK(report.dq == 1.0);
  CHECK(report.sq == 1.0);
  CHECK(report.pq == 1.0);
  CHECK(report.per_organ_fid.size() == 2);
  CHECK(report.per_organ_fid.count("breast") == 1);
  CHECK(report.per_organ_fid.count("kidney") == 1);
  CHECK(std::abs(report.per_organ_fid["breast"]) < 1e-6);
  CHECK(report.extractor_id == ext.identity());
  CHECK_FALSE(report.empty_convention);

  // A single-image organ group has no sample covariance: it still counts
  // toward the global scores but gets no per-organ row.
  std::vector<std::string> organs_odd = {"breast", "breast", "kidney", "lone"};
  const metrics::MetricReport odd =
      metrics::evaluate_sets(real, fake, gt, pred, organs_odd, ext);
  CHECK(odd.per_organ_fid.size() == 1);
  CHECK(odd.per_organ_fid.count("breast") == 1);

  // Pooled aggregation: image A has one TP, image B one FN. Pooled
  // DQ = 1 / 1.5; a per-image average would give 0.5.
  std::vector<InstanceMask> gt2, pred2;
  InstanceMask a = Array<int32_t>::zeros({16, 16});
  for (int64_t y = 0; y < 4; ++y)
    for (int64_t x = 0; x < 4; ++x) a.at(y, x) = 1;
  gt2.push_back(a.clone());
  pred2.push_back(a.clone());
  gt2.push_back(a.clone());
  pred2.push_back(Array<int32_t>::zeros({16, 16}));
  gt2.push_back(Array<int32_t>::zeros({16, 16}));
  pred2.push_back(Array<int32_t>::zeros({16, 16}));
  gt2.push_back(Array<int32_t>::zeros({16, 16}));
  pred2.push_back(Array<int32_t>::zeros({16, 16}));
  metrics::MetricReport pooled =
      metrics::evaluate_sets(real, fake, gt2, pred2, {}, ext);
  CHECK(pooled.dq == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pooled.dq != doctest::Approx(0.5).epsilon(1e-3));

  // All-empty masks engage the logged convention.
  std::vector<InstanceMask> empty(4, Array<int32_t>::zeros({16, 16}));
  metrics::MetricReport conv =
      metrics::evaluate_sets(real, fake, empty, empty, {}, ext);
  CHECK(conv.pq == 1.0);
  CHECK(conv.empty_convention);

  // Determinism for a fixed extractor.
  metrics::MetricReport again =
      metrics::evaluate_sets(real, fake, gt, pred, organs, ext);
  CHECK(again.fid == report.fid);
  CHECK(again.ssim == report.ssim);

  CHECK_THROWS_AS(metrics::evaluate_sets({}, {}, {}, {}, {}, ext),
                  std::invalid_argument);
  std::vector<InstanceMask> truncated(gt.begin(), gt.begin() + 2);
  CHECK_THROWS_AS(metrics::evaluate_sets(real, fake, truncated, pred, {}, ext),
                  std::invalid_argument);

  // Serialization: JSON tree and per-organ CSV rows.
  nlohmann::json j = nlohmann::json::parse(metrics::report_to_json(report));
  CHECK(j["ssim"].get<double>() == 1.0);
  CHECK(j["per_organ_fid"].size() == 2);
  const std::string csv = metrics::report_to_csv(report);
  CHECK(csv.find("organ,fid,ssim,dq,sq,pq\n") == 0);
  CHECK(csv.find("all,") != std::string::npos);
  CHECK(csv.find("breast,") != std::string::npos);
  CHECK(csv.find("kidney,") != std::string::npos);
}
