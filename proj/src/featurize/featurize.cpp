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

#include "sian/featurize/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace sian {
namespace featurize {
namespace {

void check_mask(const InstanceMask& inst) {
  check(inst.ndim() == 2 && inst.dim(0) >= 1 && inst.dim(1) >= 1,
        "instance mask must be a non-empty [H,W] grid");
}

struct InstanceStat {
  int64_t count = 0;
  double sx = 0.0, sy = 0.0;
  int64_t x0 = std::numeric_limits<int64_t>::max(), x1 = -1;
  int64_t y0 = std::numeric_limits<int64_t>::max(), y1 = -1;
};

std::map<int32_t, InstanceStat> collect_stats(const InstanceMask& inst) {
  const int64_t h = inst.dim(0), w = inst.dim(1);
  std::map<int32_t, InstanceStat> stats;
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const int32_t id = inst[y * w + x];
      if (id == 0) continue;
      check(id > 0, "instance mask has negative label");
      InstanceStat& s = stats[id];
      ++s.count;
      s.sx += static_cast<double>(x);
      s.sy += static_cast<double>(y);
      s.x0 = std::min(s.x0, x);
      s.x1 = std::max(s.x1, x);
      s.y0 = std::min(s.y0, y);
      s.y1 = std::max(s.y1, y);
    }
  return stats;
}

// 1-d squared distance transform (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d,
            std::vector<int64_t>& v, std::vector<double>& z) {
  const int64_t n = static_cast<int64_t>(f.size());
  d.assign(f.size(), 0.0);
  v.assign(f.size(), 0);
  z.assign(f.size() + 1, 0.0);
  int64_t k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int64_t q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int64_t p = v[static_cast<size_t>(k)];
      s = ((f[static_cast<size_t>(q)] + static_cast<double>(q * q)) -
           (f[static_cast<size_t>(p)] + static_cast<double>(p * p))) /
          (2.0 * static_cast<double>(q - p));
      if (s > z[static_cast<size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<size_t>(k)] = q;
    z[static_cast<size_t>(k)] = s;
    z[static_cast<size_t>(k) + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int64_t q = 0; q < n; ++q) {
    while (z[static_cast<size_t>(k) + 1] < static_cast<double>(q)) ++k;
    const int64_t p = v[static_cast<size_t>(k)];
    d[static_cast<size_t>(q)] =
        static_cast<double>((q - p) * (q - p)) + f[static_cast<size_t>(p)];
  }
}

}  // namespace

Array<float> semantic_map(const InstanceMask& inst) {
  check_mask(inst);
  const int64_t h = inst.dim(0), w = inst.dim(1);
  Array<float> m({2, h, w});
  for (int64_t i = 0; i < h * w; ++i) {
    const bool nucleus = inst[i] != 0;
    m[i] = nucleus ? 0.0f : 1.0f;
    m[h * w + i] = nucleus ? 1.0f : 0.0f;
  }
  return m;
}

Array<float> direction_map(const InstanceMask& inst) {
  check_mask(inst);
  const int64_t h = inst.dim(0), w = inst.dim(1);
  auto stats = collect_stats(inst);
  Array<float> p({2, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const int32_t id = inst[y * w + x];
      if (id == 0) continue;
      const InstanceStat& s = stats.at(id);
      const double cx = s.sx / static_cast<double>(s.count);
      const double cy = s.sy / static_cast<double>(s.count);
      const double dx = cx - static_cast<double>(x);
      const double dy = cy - static_cast<double>(y);
      if (std::max(std::abs(dx), std::abs(dy)) < 0.5) continue;  // centroid px
      const double norm = std::sqrt(dx * dx + dy * dy);
      p[y * w + x] = static_cast<float>(dx / norm);
      p[h * w + y * w + x] = static_cast<float>(dy / norm);
    }
  return p;
}

Array<float> distance_map(const InstanceMask& inst) {
  check_mask(inst);
  const int64_t h = inst.dim(0), w = inst.dim(1);
  auto stats = collect_stats(inst);
  Array<float> q({1, h, w});
  constexpr double kInf = 1e18;

  std::vector<double> f, d, col;
  std::vector<int64_t> v;
  std::vector<double> z;
  for (const auto& [id, s] : stats) {
    // Padded bounding box: the extra ring is complement by construction
    // (other labels, background, or out-of-image), and no complement cell
    // outside it can be nearer than the ring, so the transform is exact.
    const int64_t bh = s.y1 - s.y0 + 3, bw = s.x1 - s.x0 + 3;
    std::vector<double> grid(static_cast<size_t>(bh * bw), 0.0);
    for (int64_t y = 0; y < bh; ++y)
      for (int64_t x = 0; x < bw; ++x) {
        const int64_t gy = s.y0 + y - 1, gx = s.x0 + x - 1;
        const bool inside = gy >= 0 && gy < h && gx >= 0 && gx < w;
        if (inside && inst[gy * w + gx] == id)
          grid[static_cast<size_t>(y * bw + x)] = kInf;
      }
    // Column pass then row pass.
    col.resize(static_cast<size_t>(bh));
    for (int64_t x = 0; x < bw; ++x) {
      for (int64_t y = 0; y < bh; ++y)
        col[static_cast<size_t>(y)] = grid[static_cast<size_t>(y * bw + x)];
      edt_1d(col, d, v, z);
      for (int64_t y = 0; y < bh; ++y)
        grid[static_cast<size_t>(y * bw + x)] = d[static_cast<size_t>(y)];
    }
    f.resize(static_cast<size_t>(bw));
    for (int64_t y = 0; y < bh; ++y) {
      for (int64_t x = 0; x < bw; ++x)
        f[static_cast<size_t>(x)] = grid[static_cast<size_t>(y * bw + x)];
      edt_1d(f, d, v, z);
      for (int64_t x = 0; x < bw; ++x)
        grid[static_cast<size_t>(y * bw + x)] = d[static_cast<size_t>(x)];
    }
    double dmax = 0.0;
    for (int64_t y = s.y0; y <= s.y1; ++y)
      for (int64_t x = s.x0; x <= s.x1; ++x)
        if (inst[y * w + x] == id)
          dmax = std::max(dmax,
                          grid[static_cast<size_t>((y - s.y0 + 1) * bw +
                                                   (x - s.x0 + 1))]);
    const double inv = 1.0 / std::sqrt(dmax);
    for (int64_t y = s.y0; y <= s.y1; ++y)
      for (int64_t x = s.x0; x <= s.x1; ++x)
        if (inst[y * w + x] == id)
          q[y * w + x] = static_cast<float>(
              std::sqrt(grid[static_cast<size_t>((y - s.y0 + 1) * bw +
                                                 (x - s.x0 + 1))]) *
              inv);
  }
  return q;
}

ConditionMaps featurize(const InstanceMask& inst) {
  return ConditionMaps{semantic_map(inst), direction_map(inst),
                       distance_map(inst)};
}

namespace {

Array<float> half_nearest(const Array<float>& in) {
  const int64_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  Array<float> out({c, h / 2, w / 2});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h / 2; ++y)
      for (int64_t x = 0; x < w / 2; ++x)
        out[(ch * (h / 2) + y) * (w / 2) + x] =
            in[(ch * h + 2 * y) * w + 2 * x];
  return out;
}

Array<float> half_mean(const Array<float>& in) {
  const int64_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  Array<float> out({c, h / 2, w / 2});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h / 2; ++y)
      for (int64_t x = 0; x < w / 2; ++x) {
        const float* base = in.data() + (ch * h + 2 * y) * w + 2 * x;
        out[(ch * (h / 2) + y) * (w / 2) + x] =
            (base[0] + base[1] + base[w] + base[w + 1]) * 0.25f;
      }
  return out;
}

}  // namespace

std::vector<ConditionMaps> build_condition_pyramid(
    const ConditionMaps& maps,
    const std::vector<std::pair<int64_t, int64_t>>& target_sizes) {
  const int64_t h = maps.semantic.dim(1), w = maps.semantic.dim(2);
  check(maps.direction.dim(1) == h && maps.distance.dim(1) == h &&
            maps.direction.dim(2) == w && maps.distance.dim(2) == w,
        "build_condition_pyramid: inconsistent map sizes");

  // Ladder of successive halvings, native size first.
  std::vector<ConditionMaps> ladder;
  ladder.push_back(ConditionMaps{maps.semantic, maps.direction, maps.distance});
  while (ladder.back().semantic.dim(1) % 2 == 0 &&
         ladder.back().semantic.dim(2) % 2 == 0 &&
         ladder.back().semantic.dim(1) >= 2 &&
         ladder.back().semantic.dim(2) >= 2) {
    const ConditionMaps& prev = ladder.back();
    ladder.push_back(ConditionMaps{half_nearest(prev.semantic),
                                   half_mean(prev.direction),
                                   half_mean(prev.distance)});
  }

  std::vector<ConditionMaps> out;
  for (const auto& [th, tw] : target_sizes) {
    check(th >= 1 && tw >= 1, "build_condition_pyramid: non-positive target size");
    bool found = false;
    for (const auto& lvl : ladder)
      if (lvl.semantic.dim(1) == th && lvl.semantic.dim(2) == tw) {
        out.push_back(lvl);
        found = true;
        break;
      }
    check(found, "build_condition_pyramid: target " + std::to_string(th) + "x" +
                     std::to_string(tw) +
                     " is not a dyadic fraction of the native size");
  }
  return out;
}

std::vector<std::string> validate_mask(const InstanceMask& inst) {
  std::vector<std::string> problems;
  if (inst.ndim() != 2 || inst.dim(0) < 1 || inst.dim(1) < 1) {
    problems.push_back("mask is not a non-empty [H,W] grid");
    return problems;
  }
  const int64_t h = inst.dim(0), w = inst.dim(1);
  std::unordered_map<int32_t, int64_t> pixel_count;
  for (int64_t i = 0; i < h * w; ++i) {
    if (inst[i] < 0) {
      problems.push_back("negative label " + std::to_string(inst[i]));
      return problems;
    }
    if (inst[i] > 0) ++pixel_count[inst[i]];
  }
  // Flood-fill from each id's first pixel; one component per id required.
  std::unordered_map<int32_t, int64_t> reached;
  std::vector<uint8_t> seen(static_cast<size_t>(h * w), 0);
  std::vector<int64_t> stack;
  for (int64_t i = 0; i < h * w; ++i) {
    const int32_t id = inst[i];
    if (id == 0 || seen[static_cast<size_t>(i)]) continue;
    if (reached.count(id)) continue;  // second component found later
    stack.assign(1, i);
    seen[static_cast<size_t>(i)] = 1;
    int64_t size = 0;
    while (!stack.empty()) {
      const int64_t p = stack.back();
      stack.pop_back();
      ++size;
      const int64_t y = p / w, x = p % w;
      const int64_t nbr[4] = {p - w, p + w, p - 1, p + 1};
      const bool ok[4] = {y > 0, y + 1 < h, x > 0, x + 1 < w};
      for (int k = 0; k < 4; ++k) {
        if (!ok[k]) continue;
        const int64_t q = nbr[k];
        if (!seen[static_cast<size_t>(q)] && inst[q] == id) {
          seen[static_cast<size_t>(q)] = 1;
          stack.push_back(q);
        }
      }
    }
    reached[id] = size;
  }
  for (const auto& [id, total] : pixel_count)
    if (reached[id] != total)
      problems.push_back("label " + std::to_string(id) +
                         " is not 4-connected (" + std::to_string(reached[id]) +
                         " of " + std::to_string(total) + " pixels reachable)");
  return problems;
}

InstanceMask relabel_compact(const InstanceMask& inst) {
  check_mask(inst);
  InstanceMask out(inst.shape());
  std::unordered_map<int32_t, int32_t> remap;
  int32_t next = 1;
  for (int64_t i = 0; i < inst.size(); ++i) {
    const int32_t id = inst[i];
    if (id == 0) {
      out[i] = 0;
      continue;
    }
    auto it = remap.find(id);
    if (it == remap.end()) it = remap.emplace(id, next++).first;
    out[i] = it->second;
  }
  return out;
}

InstanceMask connected_components_4(const InstanceMask& inst) {
  check_mask(inst);
  const int64_t h = inst.dim(0), w = inst.dim(1);
  InstanceMask out = Array<int32_t>::zeros({h, w});
  int32_t next = 1;
  std::vector<int64_t> stack;
  for (int64_t i = 0; i < h * w; ++i) {
    if (inst[i] == 0 || out[i] != 0) continue;
    const int32_t label = next++;
    stack.assign(1, i);
    out[i] = label;
    while (!stack.empty()) {
      const int64_t p = stack.back();
      stack.pop_back();
      const int64_t y = p / w, x = p % w;
      const int64_t nbr[4] = {p - w, p + w, p - 1, p + 1};
      const bool ok[4] = {y > 0, y + 1 < h, x > 0, x + 1 < w};
      for (int k = 0; k < 4; ++k) {
        if (!ok[k]) continue;
        const int64_t q = nbr[k];
        if (inst[q] != 0 && out[q] == 0) {
          out[q] = label;
          stack.push_back(q);
        }
      }
    }
  }
  return out;
}

}  // namespace featurize
}  // namespace sian
