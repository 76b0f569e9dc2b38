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

#include "sian/metrics/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sian {
namespace metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

// Normalized 11x11 Gaussian window.
std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow * kWindow);
  const int half = kWindow / 2;
  double sum = 0;
  for (int i = 0; i < kWindow; ++i)
    for (int j = 0; j < kWindow; ++j) {
      const double dy = i - half, dx = j - half;
      w[i * kWindow + j] = std::exp(-(dx * dx + dy * dy) / (2 * kSigma * kSigma));
      sum += w[i * kWindow + j];
    }
  for (double& v : w) v /= sum;
  return w;
}

// Windowed sum at a valid anchor: sum_w w_ij * img[y+i][x+j].
double window_dot(const std::vector<double>& w, const double* img, int64_t width,
                  int64_t y, int64_t x) {
  double acc = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double* row = img + (y + i) * width + x;
    const double* wr = w.data() + i * kWindow;
    for (int j = 0; j < kWindow; ++j) acc += wr[j] * row[j];
  }
  return acc;
}

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMat to_eigen(const Array<double>& a) {
  return Eigen::Map<const RowMat>(a.data(), a.dim(0), a.dim(1));
}

// Symmetric PSD square root with the documented eigenvalue clamping.
RowMat psd_sqrt(const RowMat& m, const char* label) {
  Eigen::SelfAdjointEigenSolver<RowMat> solver(m);
  check_runtime(solver.info() == Eigen::Success,
                std::string("fid: eigendecomposition failed for ") + label);
  Eigen::VectorXd evals = solver.eigenvalues();
  for (int i = 0; i < evals.size(); ++i) {
    check(evals[i] >= -1e-8,
          std::string("fid: covariance is not positive semidefinite (") +
              label + ")");
    if (evals[i] < 0) evals[i] = 0;
    evals[i] = std::sqrt(evals[i]);
  }
  return solver.eigenvectors() * evals.asDiagonal() *
         solver.eigenvectors().transpose();
}

}  // namespace

double ssim(const Array<double>& x, const Array<double>& y,
            double dynamic_range) {
  check(x.ndim() == 3 && x.same_shape(y), "ssim: images must be equal [C,H,W]");
  check(dynamic_range > 0, "ssim: dynamic range must be positive");
  const int64_t channels = x.dim(0), h = x.dim(1), w = x.dim(2);
  check(h >= kWindow && w >= kWindow,
        "ssim: images must be at least 11x11 pixels");
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  static const std::vector<double> win = gaussian_window();

  const int64_t vh = h - kWindow + 1, vw = w - kWindow + 1;
  double channel_sum = 0;
  for (int64_t c = 0; c < channels; ++c) {
    const double* xc = x.data() + c * h * w;
    const double* yc = y.data() + c * h * w;
    Array<double> xx({h, w}), yy({h, w}), xy({h, w});
    for (int64_t i = 0; i < h * w; ++i) {
      xx[i] = xc[i] * xc[i];
      yy[i] = yc[i] * yc[i];
      xy[i] = xc[i] * yc[i];
    }
    double acc = 0;
    for (int64_t i = 0; i < vh; ++i)
      for (int64_t j = 0; j < vw; ++j) {
        const double mx = window_dot(win, xc, w, i, j);
        const double my = window_dot(win, yc, w, i, j);
        const double var_x = window_dot(win, xx.data(), w, i, j) - mx * mx;
        const double var_y = window_dot(win, yy.data(), w, i, j) - my * my;
        const double cov = window_dot(win, xy.data(), w, i, j) - mx * my;
        const double num = (2 * mx * my + c1) * (2 * cov + c2);
        const double den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        acc += num / den;
      }
    channel_sum += acc / static_cast<double>(vh * vw);
  }
  return channel_sum / static_cast<double>(channels);
}

GaussStats gauss_stats(const Array<double>& embeddings) {
  check(embeddings.ndim() == 2, "gauss_stats: embeddings must be [N,D]");
  const int64_t n = embeddings.dim(0), d = embeddings.dim(1);
  check(n >= 2, "gauss_stats: need at least 2 samples");
  check(embeddings.all_finite(), "gauss_stats: non-finite embeddings");
  GaussStats stats;
  stats.mean = Array<double>::zeros({d});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j) stats.mean[j] += embeddings.at(i, j);
  for (int64_t j = 0; j < d; ++j) stats.mean[j] /= static_cast<double>(n);

  stats.cov = Array<double>::zeros({d, d});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j) {
      const double dj = embeddings.at(i, j) - stats.mean[j];
      for (int64_t k = j; k < d; ++k)
        stats.cov.at(j, k) += dj * (embeddings.at(i, k) - stats.mean[k]);
    }
  for (int64_t j = 0; j < d; ++j)
    for (int64_t k = j; k < d; ++k) {
      stats.cov.at(j, k) /= static_cast<double>(n - 1);
      stats.cov.at(k, j) = stats.cov.at(j, k);
    }
  return stats;
}

double fid(const GaussStats& a, const GaussStats& b) {
  check(a.mean.ndim() == 1 && a.cov.ndim() == 2, "fid: malformed stats");
  check(a.mean.same_shape(b.mean) && a.cov.same_shape(b.cov),
        "fid: dimension mismatch between the two statistics");
  check(a.mean.all_finite() && a.cov.all_finite() && b.mean.all_finite() &&
            b.cov.all_finite(),
        "fid: non-finite statistics");
  const int64_t d = a.mean.dim(0);
  double mean_term = 0;
  for (int64_t i = 0; i < d; ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mean_term += diff * diff;
  }
  const RowMat ca = to_eigen(a.cov), cb = to_eigen(b.cov);
  const RowMat sqrt_a = psd_sqrt(ca, "first argument");
  // tr((Ca Cb)^{1/2}) = tr((Ca^{1/2} Cb Ca^{1/2})^{1/2}), and the latter
  // matrix is symmetric PSD, so one symmetric eigensolve suffices.
  const RowMat inner = sqrt_a * cb * sqrt_a;
  const RowMat sqrt_inner = psd_sqrt(inner, "product");
  return mean_term + ca.trace() + cb.trace() - 2.0 * sqrt_inner.trace();
}

GaussStats embed_set(const std::vector<Array<float>>& images,
                     const net::FeatureExtractor<float>& extractor) {
  check(images.size() >= 2, "embed_set: need at least 2 images");
  const Shape& shape = images[0].shape();
  check(images[0].ndim() == 3 && shape[0] == 3,
        "embed_set: images must be [3,H,W]");
  const int64_t n = static_cast<int64_t>(images.size());
  Array<float> batch({n, shape[0], shape[1], shape[2]});
  const int64_t per = images[0].size();
  for (int64_t i = 0; i < n; ++i) {
    check(images[i].same_shape(images[0]),
          "embed_set: images must share one shape");
    std::copy(images[i].data(), images[i].data() + per,
              batch.data() + i * per);
  }
  return gauss_stats(extractor.embed(batch).astype<double>());
}

Matching match_instances(const featurize::InstanceMask& gt,
                         const featurize::InstanceMask& pred) {
  check(gt.same_shape(pred), "match_instances: masks must have equal shapes");
  std::map<int32_t, int64_t> gt_area, pred_area;
  std::map<std::pair<int32_t, int32_t>, int64_t> inter;
  for (int64_t i = 0; i < gt.size(); ++i) {
    const int32_t g = gt[i], p = pred[i];
    if (g != 0) ++gt_area[g];
    if (p != 0) ++pred_area[p];
    if (g != 0 && p != 0) ++inter[{g, p}];
  }
  Matching out;
  std::set<int32_t> matched_gt, matched_pred;
  for (const auto& [pair, count] : inter) {
    const auto [g, p] = pair;
    const double iou = static_cast<double>(count) /
                       static_cast<double>(gt_area[g] + pred_area[p] - count);
    if (iou > 0.5) {
      out.pairs.push_back({g, p, iou});
      matched_gt.insert(g);
      matched_pred.insert(p);
    }
  }
  for (const auto& [g, area] : gt_area)
    if (!matched_gt.count(g)) out.unmatched_gt.push_back(g);
  for (const auto& [p, area] : pred_area)
    if (!matched_pred.count(p)) out.unmatched_pred.push_back(p);
  return out;
}

void PqAccumulator::add(const Matching& matching) {
  tp += static_cast<int64_t>(matching.pairs.size());
  fp += static_cast<int64_t>(matching.unmatched_pred.size());
  fn += static_cast<int64_t>(matching.unmatched_gt.size());
  for (const MatchedPair& pair : matching.pairs) iou_sum += pair.iou;
}

PqResult PqAccumulator::result() const {
  if (empty()) return {1.0, 1.0, 1.0};
  PqResult r;
  r.dq = static_cast<double>(tp) /
         (static_cast<double>(tp) + 0.5 * static_cast<double>(fp) +
          0.5 * static_cast<double>(fn));
  r.sq = tp == 0 ? 0.0 : iou_sum / static_cast<double>(tp);
  r.pq = r.dq * r.sq;
  return r;
}

PqResult pq_metrics(const Matching& matching) {
  PqAccumulator acc;
  acc.add(matching);
  return acc.result();
}

MetricReport evaluate_sets(
    const std::vector<Array<float>>& real_images,
    const std::vector<Array<float>>& fake_images,
    const std::vector<featurize::InstanceMask>& gt_masks,
    const std::vector<featurize::InstanceMask>& pred_masks,
    const std::vector<std::string>& organ_tags,
    const net::FeatureExtractor<float>& extractor) {
  const size_t n = real_images.size();
  check(n >= 2, "evaluate_sets: need at least 2 image pairs");
  check(fake_images.size() == n && gt_masks.size() == n &&
            pred_masks.size() == n,
        "evaluate_sets: aligned lists required");
  check(organ_tags.empty() || organ_tags.size() == n,
        "evaluate_sets: organ tags must be absent or one per image");

  MetricReport report;
  report.extractor_id = extractor.identity();

  // Structural similarity is computed per pair in [0,1] and averaged.
  double ssim_sum = 0;
  for (size_t i = 0; i < n; ++i) {
    Array<double> a = real_images[i].astype<double>();
    Array<double> b = fake_images[i].astype<double>();
    for (int64_t j = 0; j < a.size(); ++j) {
      a[j] = std::clamp((a[j] + 1.0) / 2.0, 0.0, 1.0);
      b[j] = std::clamp((b[j] + 1.0) / 2.0, 0.0, 1.0);
    }
    ssim_sum += ssim(a, b, 1.0);
  }
  report.ssim = ssim_sum / static_cast<double>(n);

  report.fid = fid(embed_set(real_images, extractor),
                   embed_set(fake_images, extractor));

  if (!organ_tags.empty()) {
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < n; ++i) groups[organ_tags[i]].push_back(i);
    for (const auto& [tag, indices] : groups) {
      // A single image has no sample covariance; such groups contribute to
      // the global scores but get no per-organ entry.
      if (indices.size() < 2) continue;
      std::vector<Array<float>> real_sub, fake_sub;
      for (size_t i : indices) {
        real_sub.push_back(real_images[i]);
        fake_sub.push_back(fake_images[i]);
      }
      report.per_organ_fid[tag] =
          fid(embed_set(real_sub, extractor), embed_set(fake_sub, extractor));
    }
  }

  PqAccumulator acc;
  for (size_t i = 0; i < n; ++i)
    acc.add(match_instances(gt_masks[i], pred_masks[i]));
  report.empty_convention = acc.empty();
  const PqResult pq = acc.result();
  report.dq = pq.dq;
  report.sq = pq.sq;
  report.pq = pq.pq;
  return report;
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["fid"] = report.fid;
  j["ssim"] = report.ssim;
  j["dq"] = report.dq;
  j["sq"] = report.sq;
  j["pq"] = report.pq;
  j["extractor"] = report.extractor_id;
  j["empty_convention"] = report.empty_convention;
  j["per_organ_fid"] = nlohmann::json::object();
  for (const auto& [tag, value] : report.per_organ_fid)
    j["per_organ_fid"][tag] = value;
  return j.dump(2);
}

std::string report_to_csv(const MetricReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "organ,fid,ssim,dq,sq,pq\n";
  out << "all," << report.fid << ',' << report.ssim << ',' << report.dq << ','
      << report.sq << ',' << report.pq << '\n';
  for (const auto& [tag, value] : report.per_organ_fid)
    out << tag << ',' << value << ",,,,\n";
  return out.str();
}

}  // namespace metrics
}  // namespace sian
