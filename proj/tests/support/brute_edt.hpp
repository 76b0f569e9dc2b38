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

// O(n^2) distance-map oracle: per instance pixel, scan every complement cell
// (plus the four out-of-image directions) for the nearest one, then apply the
// same per-instance max normalization as the production code.

#ifndef SIAN_TESTS_SUPPORT_BRUTE_EDT_HPP_
#define SIAN_TESTS_SUPPORT_BRUTE_EDT_HPP_

#include <algorithm>
#include <cmath>
#include <map>

#include "sian/featurize/featurize.hpp"

namespace sian {
namespace testing {

inline Array<float> brute_distance_map(const featurize::InstanceMask& inst) {
  const int64_t h = inst.dim(0), w = inst.dim(1);
  Array<double> dist({h, w});
  std::map<int32_t, double> dmax;
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const int32_t id = inst[y * w + x];
      if (id == 0) continue;
      // Out-of-image cells count as complement.
      double best2 = static_cast<double>(
          std::min(std::min(y + 1, x + 1), std::min(h - y, w - x)));
      best2 *= best2;
      for (int64_t cy = 0; cy < h; ++cy)
        for (int64_t cx = 0; cx < w; ++cx) {
          if (inst[cy * w + cx] == id) continue;
          const double d2 = static_cast<double>((cy - y) * (cy - y) +
                                                (cx - x) * (cx - x));
          best2 = std::min(best2, d2);
        }
      dist[y * w + x] = std::sqrt(best2);
      auto it = dmax.find(id);
      if (it == dmax.end())
        dmax[id] = dist[y * w + x];
      else
        it->second = std::max(it->second, dist[y * w + x]);
    }
  Array<float> q({1, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const int32_t id = inst[y * w + x];
      if (id == 0) continue;
      q[y * w + x] = static_cast<float>(dist[y * w + x] / dmax.at(id));
    }
  return q;
}

}  // namespace testing
}  // namespace sian

#endif  // SIAN_TESTS_SUPPORT_BRUTE_EDT_HPP_
