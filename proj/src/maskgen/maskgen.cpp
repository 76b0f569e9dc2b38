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

#include "sian/maskgen/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <unordered_map>

#include "json.hpp"
#include "sian/io/png_io.hpp"

namespace sian {
namespace maskgen {
namespace {

namespace fs = std::filesystem;

// Orientation sign of the triangle (a, b, c).
int orient(double ax, double ay, double bx, double by, double cx, double cy) {
  const double v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(double ax, double ay, double bx, double by, double px,
                double py) {
  return std::min(ax, bx) <= px && px <= std::max(ax, bx) &&
         std::min(ay, by) <= py && py <= std::max(ay, by);
}

bool segments_intersect(double ax, double ay, double bx, double by, double cx,
                        double cy, double dx, double dy) {
  const int o1 = orient(ax, ay, bx, by, cx, cy);
  const int o2 = orient(ax, ay, bx, by, dx, dy);
  const int o3 = orient(cx, cy, dx, dy, ax, ay);
  const int o4 = orient(cx, cy, dx, dy, bx, by);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(ax, ay, bx, by, cx, cy)) return true;
  if (o2 == 0 && on_segment(ax, ay, bx, by, dx, dy)) return true;
  if (o3 == 0 && on_segment(cx, cy, dx, dy, ax, ay)) return true;
  if (o4 == 0 && on_segment(cx, cy, dx, dy, bx, by)) return true;
  return false;
}

Polygon ellipse_polygon(double a, double b, double rot, int n,
                        const std::vector<double>* radial_scale) {
  Polygon poly;
  poly.xs.resize(static_cast<size_t>(n));
  poly.ys.resize(static_cast<size_t>(n));
  const double cr = std::cos(rot), sr = std::sin(rot);
  for (int k = 0; k < n; ++k) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) /
                       static_cast<double>(n);
    const double scale = radial_scale ? (*radial_scale)[static_cast<size_t>(k)]
                                      : 1.0;
    const double ex = a * std::cos(phi) * scale;
    const double ey = b * std::sin(phi) * scale;
    poly.xs[static_cast<size_t>(k)] = ex * cr - ey * sr;
    poly.ys[static_cast<size_t>(k)] = ex * sr + ey * cr;
  }
  return poly;
}

}  // namespace

void validate(const NucleusPolygonParams& p) {
  check(p.radius_min > 0 && p.radius_min <= p.radius_max,
        "nucleus params: need 0 < radius_min <= radius_max");
  check(p.eccentricity_min >= 0 && p.eccentricity_min <= p.eccentricity_max &&
            p.eccentricity_max < 1,
        "nucleus params: eccentricity range must sit inside [0, 1)");
  check(p.vertex_count >= 8, "nucleus params: vertex_count must be >= 8");
  check(p.radial_noise_amplitude >= 0 && p.radial_noise_amplitude <= 0.5,
        "nucleus params: radial_noise_amplitude must be in [0, 0.5]");
  check(p.smoothing_passes >= 0, "nucleus params: smoothing_passes must be >= 0");
}

void validate(const LayoutParams& p) {
  check(p.height >= 16 && p.width >= 16, "layout: canvas must be at least 16x16");
  check(p.count_min >= 0 && p.count_min <= p.count_max,
        "layout: need 0 <= count_min <= count_max");
  check(p.max_pairwise_overlap_fraction >= 0 &&
            p.max_pairwise_overlap_fraction < 1,
        "layout: max_pairwise_overlap_fraction must be in [0, 1)");
  check(p.cluster_probability >= 0 && p.cluster_probability <= 1,
        "layout: cluster_probability must be in [0, 1]");
  check(p.cluster_spread >= 0, "layout: cluster_spread must be >= 0");
}

bool polygon_self_intersects(const Polygon& poly) {
  const size_t n = poly.xs.size();
  for (size_t i = 0; i < n; ++i) {
    const size_t i2 = (i + 1) % n;
    for (size_t j = i + 1; j < n; ++j) {
      const size_t j2 = (j + 1) % n;
      if (i == j || i2 == j || i == j2) continue;  // shared endpoint
      if (segments_intersect(poly.xs[i], poly.ys[i], poly.xs[i2], poly.ys[i2],
                             poly.xs[j], poly.ys[j], poly.xs[j2], poly.ys[j2]))
        return true;
    }
  }
  return false;
}

Polygon sample_nucleus_polygon(Rng& rng, const NucleusPolygonParams& params) {
  validate(params);
  const int n = params.vertex_count;
  const double a = rng.uniform(params.radius_min, params.radius_max);
  const double ecc =
      rng.uniform(params.eccentricity_min, params.eccentricity_max);
  const double rot = rng.uniform(0.0, 2.0 * std::numbers::pi);
  // Keep the semi-minor axis inside the radius range too, so vertex radii
  // stay within the documented envelope for every eccentricity draw.
  const double b = std::max(a * std::sqrt(1.0 - ecc * ecc), params.radius_min);

  if (params.radial_noise_amplitude == 0.0)
    return ellipse_polygon(a, b, rot, n, nullptr);

  std::vector<double> noise(static_cast<size_t>(n)), smooth;
  for (int attempt = 0; attempt < 10; ++attempt) {
    for (int k = 0; k < n; ++k)
      noise[static_cast<size_t>(k)] = rng.uniform(
          -params.radial_noise_amplitude, params.radial_noise_amplitude);
    // Circular moving average, window 3, repeated.
    smooth = noise;
    std::vector<double> next(static_cast<size_t>(n));
    for (int pass = 0; pass < params.smoothing_passes; ++pass) {
      for (int k = 0; k < n; ++k) {
        const int prev = (k + n - 1) % n, succ = (k + 1) % n;
        next[static_cast<size_t>(k)] = (smooth[static_cast<size_t>(prev)] +
                                        smooth[static_cast<size_t>(k)] +
                                        smooth[static_cast<size_t>(succ)]) /
                                       3.0;
      }
      smooth.swap(next);
    }
    std::vector<double> scale(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
      scale[static_cast<size_t>(k)] = 1.0 + smooth[static_cast<size_t>(k)];
    Polygon poly = ellipse_polygon(a, b, rot, n, &scale);
    if (!polygon_self_intersects(poly)) return poly;
  }
  return ellipse_polygon(a, b, rot, n, nullptr);
}

std::vector<int64_t> rasterize_polygon(const Polygon& poly, double cx,
                                       double cy, int64_t height,
                                       int64_t width) {
  const size_t n = poly.xs.size();
  check(n >= 3, "rasterize_polygon: need at least 3 vertices");
  double ymin = 1e30, ymax = -1e30;
  for (size_t i = 0; i < n; ++i) {
    ymin = std::min(ymin, poly.ys[i] + cy);
    ymax = std::max(ymax, poly.ys[i] + cy);
  }
  const int64_t y0 = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(ymin)));
  const int64_t y1 =
      std::min<int64_t>(height - 1, static_cast<int64_t>(std::floor(ymax)));

  std::vector<int64_t> pixels;
  std::vector<double> xs;
  for (int64_t y = y0; y <= y1; ++y) {
    xs.clear();
    const double fy = static_cast<double>(y);
    for (size_t i = 0; i < n; ++i) {
      const size_t j = (i + 1) % n;
      const double ay = poly.ys[i] + cy, by = poly.ys[j] + cy;
      const double ax = poly.xs[i] + cx, bx = poly.xs[j] + cx;
      // Half-open span rule so shared vertices are counted once.
      if ((ay <= fy && fy < by) || (by <= fy && fy < ay))
        xs.push_back(ax + (fy - ay) * (bx - ax) / (by - ay));
    }
    std::sort(xs.begin(), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); i += 2) {
      const int64_t px0 =
          std::max<int64_t>(0, static_cast<int64_t>(std::ceil(xs[i])));
      // Pixel centers strictly left of the exit crossing are inside.
      int64_t px1 = static_cast<int64_t>(std::ceil(xs[i + 1])) - 1;
      px1 = std::min(px1, width - 1);
      for (int64_t x = px0; x <= px1; ++x) pixels.push_back(y * width + x);
    }
  }
  std::sort(pixels.begin(), pixels.end());
  pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
  return pixels;
}

MaskResult generate_instance_mask(Rng& rng, const LayoutParams& layout,
                                  const NucleusPolygonParams& nucleus) {
  validate(layout);
  validate(nucleus);
  const int64_t h = layout.height, w = layout.width;

  MaskResult result;
  result.mask = Array<int32_t>::zeros({h, w});
  result.requested = rng.uniform_int(layout.count_min, layout.count_max);
  if (result.requested == 0) return result;

  Array<int32_t>& mask = result.mask;
  std::vector<std::vector<int64_t>> placed_pixels;
  std::vector<std::pair<double, double>> centers;
  // Which placed polygons cover each pixel (overlap can stack pre-existing
  // polygons, so a single id grid is not enough).
  std::vector<std::vector<int32_t>> coverage(static_cast<size_t>(h * w));

  const int64_t budget = 100 * result.requested;
  int64_t attempts = 0;
  while (result.placed < result.requested && attempts < budget) {
    ++attempts;
    Polygon poly = sample_nucleus_polygon(rng, nucleus);
    double cx, cy;
    if (!centers.empty() && rng.bernoulli(layout.cluster_probability)) {
      const auto& anchor = centers[static_cast<size_t>(rng.uniform_int(
          0, static_cast<int64_t>(centers.size()) - 1))];
      const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double dist = rng.uniform(0.0, layout.cluster_spread);
      cx = std::clamp(anchor.first + dist * std::cos(ang), 0.0,
                      static_cast<double>(w - 1));
      cy = std::clamp(anchor.second + dist * std::sin(ang), 0.0,
                      static_cast<double>(h - 1));
    } else {
      cx = rng.uniform(0.0, static_cast<double>(w - 1));
      cy = rng.uniform(0.0, static_cast<double>(h - 1));
    }

    std::vector<int64_t> pixels = rasterize_polygon(poly, cx, cy, h, w);
    if (pixels.empty()) continue;

    // Pairwise pixel overlap against every already-placed polygon.
    std::unordered_map<int32_t, int64_t> shared;
    for (const int64_t p : pixels)
      for (const int32_t idx : coverage[static_cast<size_t>(p)]) ++shared[idx];
    bool ok = true;
    for (const auto& [idx, cnt] : shared) {
      const int64_t smaller = std::min(
          static_cast<int64_t>(pixels.size()),
          static_cast<int64_t>(placed_pixels[static_cast<size_t>(idx)].size()));
      if (static_cast<double>(cnt) >
          layout.max_pairwise_overlap_fraction * static_cast<double>(smaller)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    const int32_t idx = static_cast<int32_t>(placed_pixels.size());
    for (const int64_t p : pixels) {
      coverage[static_cast<size_t>(p)].push_back(idx);
      mask[p] = idx + 1;  // later polygons claim contested pixels
    }
    placed_pixels.push_back(std::move(pixels));
    centers.emplace_back(cx, cy);
    ++result.placed;
  }

  // Overwriting can fragment earlier instances; split fragments into fresh
  // labels (two pixels connect only when they kept the same original label).
  Array<int32_t> relabeled = Array<int32_t>::zeros({h, w});
  int32_t next = 1;
  std::vector<int64_t> stack;
  for (int64_t i = 0; i < h * w; ++i) {
    if (mask[i] == 0 || relabeled[i] != 0) continue;
    const int32_t orig = mask[i];
    const int32_t label = next++;
    stack.assign(1, i);
    relabeled[i] = label;
    while (!stack.empty()) {
      const int64_t p = stack.back();
      stack.pop_back();
      const int64_t y = p / w, x = p % w;
      const int64_t nbr[4] = {p - w, p + w, p - 1, p + 1};
      const bool valid[4] = {y > 0, y + 1 < h, x > 0, x + 1 < w};
      for (int k = 0; k < 4; ++k) {
        if (!valid[k]) continue;
        const int64_t q = nbr[k];
        if (mask[q] == orig && relabeled[q] == 0) {
          relabeled[q] = label;
          stack.push_back(q);
        }
      }
    }
  }
  result.mask = relabeled;
  return result;
}

std::vector<ManifestEntry> generate_mask_dataset(
    int64_t n, const LayoutParams& layout, const NucleusPolygonParams& nucleus,
    const std::string& out_dir) {
  check(n >= 0, "generate_mask_dataset: n must be >= 0");
  validate(layout);
  validate(nucleus);
  fs::create_directories(out_dir);

  std::vector<ManifestEntry> manifest;
  std::vector<fs::path> written;
  try {
    for (int64_t i = 0; i < n; ++i) {
      const uint64_t seed = seed_mix(layout.seed, static_cast<uint64_t>(i));
      Rng rng(seed);
      MaskResult res = generate_instance_mask(rng, layout, nucleus);

      int32_t max_label = 0;
      for (int64_t p = 0; p < res.mask.size(); ++p)
        max_label = std::max(max_label, res.mask[p]);
      check_runtime(max_label <= 65535,
                    "generate_mask_dataset: label overflows 16-bit mask");
      Array<uint16_t> png({layout.height, layout.width});
      for (int64_t p = 0; p < res.mask.size(); ++p)
        png[p] = static_cast<uint16_t>(res.mask[p]);

      char name[32];
      std::snprintf(name, sizeof(name), "mask_%05lld.png",
                    static_cast<long long>(i));
      const fs::path path = fs::path(out_dir) / name;
      sian::io::write_gray16_png(path.string(), png);
      written.push_back(path);

      manifest.push_back(ManifestEntry{name, seed, max_label, res.requested});
    }

    const fs::path mpath = fs::path(out_dir) / "manifest.jsonl";
    const fs::path tmp = fs::path(out_dir) / "manifest.jsonl.tmp";
    {
      std::ofstream os(tmp);
      check_runtime(os.good(), "cannot write " + tmp.string());
      for (const auto& e : manifest) {
        nlohmann::json j;
        j["file"] = e.file;
        j["seed"] = e.seed;
        j["instances"] = e.instances;
        j["requested"] = e.requested;
        os << j.dump() << "\n";
      }
      check_runtime(os.good(), "write failed: " + tmp.string());
    }
    written.push_back(tmp);
    fs::rename(tmp, mpath);
    written.back() = mpath;
  } catch (...) {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    throw;
  }
  return manifest;
}

}  // namespace maskgen
}  // namespace sian
