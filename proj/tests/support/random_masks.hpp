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

// Random instance masks for property tests: each instance is grown from a
// seed pixel by repeatedly annexing a random free 4-neighbor, so every label
// is 4-connected by construction.

#ifndef SIAN_TESTS_SUPPORT_RANDOM_MASKS_HPP_
#define SIAN_TESTS_SUPPORT_RANDOM_MASKS_HPP_

#include <vector>

#include "sian/core/rng.hpp"
#include "sian/featurize/featurize.hpp"

namespace sian {
namespace testing {

inline featurize::InstanceMask random_instance_mask(Rng& rng, int64_t h,
                                                    int64_t w,
                                                    int max_instances = 5,
                                                    int max_pixels = 20) {
  Array<int32_t> mask = Array<int32_t>::zeros({h, w});
  const int n_inst = static_cast<int>(rng.uniform_int(0, max_instances));
  int32_t next_id = 1;
  for (int k = 0; k < n_inst; ++k) {
    const int64_t sy = rng.uniform_int(0, h - 1);
    const int64_t sx = rng.uniform_int(0, w - 1);
    if (mask[sy * w + sx] != 0) continue;
    const int32_t id = next_id++;
    std::vector<int64_t> cells = {sy * w + sx};
    mask[sy * w + sx] = id;
    const int target = static_cast<int>(rng.uniform_int(1, max_pixels));
    for (int grow = 1; grow < target; ++grow) {
      // Pick a random owned cell and try to annex a random free neighbor.
      bool annexed = false;
      for (int attempt = 0; attempt < 8 && !annexed; ++attempt) {
        const int64_t p =
            cells[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(cells.size()) - 1))];
        const int64_t y = p / w, x = p % w;
        const int64_t dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
        const int64_t dir = rng.uniform_int(0, 3);
        const int64_t ny = y + dy[dir], nx = x + dx[dir];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        if (mask[ny * w + nx] != 0) continue;
        mask[ny * w + nx] = id;
        cells.push_back(ny * w + nx);
        annexed = true;
      }
      if (!annexed) break;
    }
  }
  return mask;
}

}  // namespace testing
}  // namespace sian

#endif  // SIAN_TESTS_SUPPORT_RANDOM_MASKS_HPP_
