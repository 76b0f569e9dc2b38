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

#include "doctest.h"
#include "sian/core/rng.hpp"
#include "sian/featurize/featurize.hpp"
#include "sian/featurize/transforms.hpp"
#include "support/brute_edt.hpp"
#include "support/random_masks.hpp"

using sian::Array;
using sian::Rng;
namespace feat = sian::featurize;

namespace {

feat::InstanceMask mask_from(int64_t h, int64_t w,
                             const std::vector<int32_t>& v) {
  return Array<int32_t>::from({h, w}, v);
}

}  // namespace

TEST_CASE("semantic map: examples and one-hot invariant") {
  SUBCASE("all-zero mask") {
    auto m = feat::semantic_map(Array<int32_t>::zeros({4, 4}));
    for (int64_t i = 0; i < 16; ++i) {
      CHECK(m[i] == 1.0f);       // background channel
      CHECK(m[16 + i] == 0.0f);  // nucleus channel
    }
  }
  SUBCASE("single labeled pixel") {
    auto inst = Array<int32_t>::zeros({5, 5});
    inst[2 * 5 + 2] = 1;
    auto m = feat::semantic_map(inst);
    for (int64_t i = 0; i < 25; ++i) {
      CHECK(m[25 + i] == (i == 12 ? 1.0f : 0.0f));
      CHECK(m[i] + m[25 + i] == 1.0f);
    }
  }
  SUBCASE("three instances, 17 labeled pixels") {
    auto inst = Array<int32_t>::zeros({6, 6});
    // 1: 2x3 block (6 px), 2: 3x3 block (9 px), 3: 2 px strip = 17 px.
    for (int64_t y = 0; y < 2; ++y)
      for (int64_t x = 0; x < 3; ++x) inst[y * 6 + x] = 1;
    for (int64_t y = 3; y < 6; ++y)
      for (int64_t x = 3; x < 6; ++x) inst[y * 6 + x] = 2;
    inst[5 * 6 + 0] = 3;
    inst[5 * 6 + 1] = 3;
    auto m = feat::semantic_map(inst);
    float total = 0;
    for (int64_t i = 0; i < 36; ++i) total += m[36 + i];
    CHECK(total == 17.0f);
  }
}

TEST_CASE("direction map: hand examples") {
  SUBCASE("single-pixel instance is its own centroid") {
    auto inst = Array<int32_t>::zeros({3, 3});
    inst[4] = 1;
    auto p = feat::direction_map(inst);
    for (int64_t i = 0; i < p.size(); ++i) CHECK(p[i] == 0.0f);
  }
  SUBCASE("horizontal 3-pixel instance") {
    auto inst = mask_from(1, 3, {1, 1, 1});
    auto p = feat::direction_map(inst);
    // centroid x = 1: left pixel points right, right pixel points left.
    CHECK(p[0] == 1.0f);   // dx at x=0
    CHECK(p[1] == 0.0f);   // dx at x=1 (centroid pixel)
    CHECK(p[2] == -1.0f);  // dx at x=2
    for (int64_t i = 3; i < 6; ++i) CHECK(p[i] == 0.0f);  // dy row
  }
  SUBCASE("support and unit-norm invariants") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      auto inst = sian::testing::random_instance_mask(rng, 16, 16);
      auto p = feat::direction_map(inst);
      const int64_t hw = 16 * 16;
      for (int64_t i = 0; i < hw; ++i) {
        const double n = std::hypot(p[i], p[hw + i]);
        if (inst[i] == 0) {
          CHECK(n == 0.0);
        } else {
          CHECK((n == 0.0 || std::abs(n - 1.0) < 1e-6));
        }
      }
    }
  }
}

TEST_CASE("direction map: rotation equivariance on random masks") {
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    auto inst = sian::testing::random_instance_mask(rng, 16, 16);
    auto rotated_then_featurized = feat::direction_map(feat::rot90_grid(inst));
    auto featurized_then_rotated =
        feat::remap_direction_rot90(feat::rot90_chw(feat::direction_map(inst)));
    REQUIRE(rotated_then_featurized.same_shape(featurized_then_rotated));
    for (int64_t i = 0; i < rotated_then_featurized.size(); ++i)
      CHECK(std::abs(rotated_then_featurized[i] - featurized_then_rotated[i]) <
            1e-6f);
  }
}

TEST_CASE("direction map: horizontal flip equivariance") {
  Rng rng(18);
  for (int t = 0; t < 25; ++t) {
    auto inst = sian::testing::random_instance_mask(rng, 16, 16);
    auto a = feat::direction_map(feat::flip_h_grid(inst));
    auto b = feat::remap_direction_flip_h(
        feat::flip_h_chw(feat::direction_map(inst)));
    for (int64_t i = 0; i < a.size(); ++i)
      CHECK(std::abs(a[i] - b[i]) < 1e-6f);
  }
}

TEST_CASE("distance map: hand examples") {
  SUBCASE("single-pixel instance") {
    auto inst = Array<int32_t>::zeros({4, 4});
    inst[5] = 1;
    auto q = feat::distance_map(inst);
    CHECK(q[5] == 1.0f);
    float total = 0;
    for (int64_t i = 0; i < q.size(); ++i) total += q[i];
    CHECK(total == 1.0f);
  }
  SUBCASE("5x5 filled square inside a 9x9 image") {
    auto inst = Array<int32_t>::zeros({9, 9});
    for (int64_t y = 2; y < 7; ++y)
      for (int64_t x = 2; x < 7; ++x) inst[y * 9 + x] = 1;
    auto q = feat::distance_map(inst);
    CHECK(q[4 * 9 + 4] == 1.0f);  // center = ridge
    // The whole outer ring of the square takes the minimum positive value.
    const float ring = q[2 * 9 + 2];
    CHECK(ring == doctest::Approx(1.0f / 3.0f));
    for (int64_t x = 2; x < 7; ++x) {
      CHECK(q[2 * 9 + x] == doctest::Approx(ring));
      CHECK(q[6 * 9 + x] == doctest::Approx(ring));
    }
    // Background is exactly 0.
    CHECK(q[0] == 0.0f);
  }
  SUBCASE("5x5 square filling the whole image (border is complement)") {
    auto inst = Array<int32_t>::zeros({5, 5});
    for (int64_t i = 0; i < 25; ++i) inst[i] = 1;
    auto q = feat::distance_map(inst);
    CHECK(q[2 * 5 + 2] == 1.0f);
    CHECK(q[0] == doctest::Approx(1.0f / 3.0f));
  }
  SUBCASE("translation equivariance by (3,7)") {
    Rng rng(23);
    for (int t = 0; t < 10; ++t) {
      auto small = sian::testing::random_instance_mask(rng, 8, 8, 3, 10);
      auto a = Array<int32_t>::zeros({20, 20});
      auto b = Array<int32_t>::zeros({20, 20});
      for (int64_t y = 0; y < 8; ++y)
        for (int64_t x = 0; x < 8; ++x) {
          a[(y + 1) * 20 + (x + 1)] = small[y * 8 + x];
          b[(y + 1 + 3) * 20 + (x + 1 + 7)] = small[y * 8 + x];
        }
      auto qa = feat::distance_map(a);
      auto qb = feat::distance_map(b);
      for (int64_t y = 0; y < 8; ++y)
        for (int64_t x = 0; x < 8; ++x)
          CHECK(qa[(y + 1) * 20 + (x + 1)] ==
                qb[(y + 4) * 20 + (x + 8)]);
    }
  }
}

TEST_CASE("distance map: agrees with the brute-force oracle") {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    auto inst = sian::testing::random_instance_mask(rng, 16, 16, 6, 30);
    auto fast = feat::distance_map(inst);
    auto ref = sian::testing::brute_distance_map(inst);
    for (int64_t i = 0; i < fast.size(); ++i)
      CHECK(std::abs(fast[i] - ref[i]) < 1e-6f);
  }
}

TEST_CASE("distance map: range and per-instance max invariants") {
  Rng rng(37);
  for (int t = 0; t < 20; ++t) {
    auto inst = sian::testing::random_instance_mask(rng, 16, 16);
    auto q = feat::distance_map(inst);
    std::map<int32_t, float> maxima;
    for (int64_t i = 0; i < 256; ++i) {
      CHECK(q[i] >= 0.0f);
      CHECK(q[i] <= 1.0f);
      if (inst[i] == 0) {
        CHECK(q[i] == 0.0f);
      } else {
        CHECK(q[i] > 0.0f);
        auto it = maxima.find(inst[i]);
        maxima[inst[i]] = it == maxima.end() ? q[i] : std::max(it->second, q[i]);
      }
    }
    for (const auto& [id, m] : maxima) CHECK(m == 1.0f);
  }
}

TEST_CASE("featurize is deterministic") {
  Rng rng(41);
  auto inst = sian::testing::random_instance_mask(rng, 16, 16);
  auto a = feat::featurize(inst);
  auto b = feat::featurize(inst);
  for (int64_t i = 0; i < a.semantic.size(); ++i)
    CHECK(a.semantic[i] == b.semantic[i]);
  for (int64_t i = 0; i < a.direction.size(); ++i)
    CHECK(a.direction[i] == b.direction[i]);
  for (int64_t i = 0; i < a.distance.size(); ++i)
    CHECK(a.distance[i] == b.distance[i]);
}

TEST_CASE("condition pyramid") {
  SUBCASE("identity target returns maps unchanged") {
    Rng rng(43);
    auto maps = feat::featurize(sian::testing::random_instance_mask(rng, 8, 8));
    auto levels = feat::build_condition_pyramid(maps, {{8, 8}});
    REQUIRE(levels.size() == 1);
    for (int64_t i = 0; i < maps.semantic.size(); ++i)
      CHECK(levels[0].semantic[i] == maps.semantic[i]);
    for (int64_t i = 0; i < maps.distance.size(); ++i)
      CHECK(levels[0].distance[i] == maps.distance[i]);
  }
  SUBCASE("all-nucleus semantic stays one-hot after downsampling") {
    auto inst = Array<int32_t>::zeros({8, 8});
    // A single 4-connected instance covering everything.
    for (int64_t i = 0; i < 64; ++i) inst[i] = 1;
    auto maps = feat::featurize(inst);
    auto levels = feat::build_condition_pyramid(maps, {{4, 4}, {2, 2}});
    for (const auto& lvl : levels) {
      const int64_t hw = lvl.semantic.dim(1) * lvl.semantic.dim(2);
      for (int64_t i = 0; i < hw; ++i) {
        CHECK(lvl.semantic[i] == 0.0f);
        CHECK(lvl.semantic[hw + i] == 1.0f);
      }
    }
  }
  SUBCASE("area mean of a 2x2 block {1,1,0,0} is 0.5") {
    feat::ConditionMaps maps;
    maps.semantic = Array<float>::zeros({2, 2, 2});
    for (int64_t i = 0; i < 4; ++i) maps.semantic[i] = 1.0f;  // valid one-hot
    maps.direction = Array<float>::zeros({2, 2, 2});
    maps.distance = Array<float>::from({1, 2, 2}, {1.0f, 1.0f, 0.0f, 0.0f});
    auto levels = feat::build_condition_pyramid(maps, {{1, 1}});
    CHECK(levels[0].distance[0] == 0.5f);
  }
  SUBCASE("one-hot preserved on random masks at every level") {
    Rng rng(47);
    for (int t = 0; t < 10; ++t) {
      auto maps =
          feat::featurize(sian::testing::random_instance_mask(rng, 16, 16));
      auto levels =
          feat::build_condition_pyramid(maps, {{16, 16}, {8, 8}, {4, 4}, {2, 2}});
      for (const auto& lvl : levels) {
        const int64_t hw = lvl.semantic.dim(1) * lvl.semantic.dim(2);
        for (int64_t i = 0; i < hw; ++i) {
          const float bg = lvl.semantic[i], fg = lvl.semantic[hw + i];
          CHECK(((bg == 0.0f && fg == 1.0f) || (bg == 1.0f && fg == 0.0f)));
        }
      }
    }
  }
  SUBCASE("invalid targets rejected") {
    Rng rng(53);
    auto maps = feat::featurize(sian::testing::random_instance_mask(rng, 8, 8));
    CHECK_THROWS_AS(feat::build_condition_pyramid(maps, {{0, 4}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(feat::build_condition_pyramid(maps, {{3, 3}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(feat::build_condition_pyramid(maps, {{16, 16}}),
                    std::invalid_argument);
  }
}

TEST_CASE("mask validation and relabeling") {
  SUBCASE("valid masks pass") {
    Rng rng(59);
    for (int t = 0; t < 10; ++t) {
      auto inst = sian::testing::random_instance_mask(rng, 16, 16);
      CHECK(feat::validate_mask(inst).empty());
    }
  }
  SUBCASE("split label detected") {
    auto inst = mask_from(1, 5, {1, 0, 1, 0, 0});
    auto problems = feat::validate_mask(inst);
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].find("not 4-connected") != std::string::npos);
  }
  SUBCASE("diagonal-only contact is not connected") {
    auto inst = mask_from(2, 2, {1, 0, 0, 1});
    CHECK_FALSE(feat::validate_mask(inst).empty());
  }
  SUBCASE("relabel preserves geometry, compacts ids") {
    auto inst = mask_from(2, 3, {7, 7, 0, 0, 3, 3});
    auto out = feat::relabel_compact(inst);
    CHECK(out[0] == 1);
    CHECK(out[1] == 1);
    CHECK(out[2] == 0);
    CHECK(out[4] == 2);
    CHECK(out[5] == 2);
  }
  SUBCASE("connected components over nonzero support") {
    auto inst = mask_from(2, 5, {5, 5, 0, 9, 9, 0, 0, 0, 9, 9});
    auto cc = feat::connected_components_4(inst);
    CHECK(cc[0] == 1);
    CHECK(cc[3] == 2);
    CHECK(cc[8] == 2);  // touching labels merge: only zero/nonzero matters
  }
}
