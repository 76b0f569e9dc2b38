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

// Geometric transforms shared by augmentation and the equivariance tests.
// rot90 follows out[i][j] = in[j][W-1-i] (counter-clockwise);
// under it a direction field transforms as (dx, dy) -> (dy, -dx).

#ifndef SIAN_FEATURIZE_TRANSFORMS_HPP_
#define SIAN_FEATURIZE_TRANSFORMS_HPP_

#include "sian/core/array.hpp"

namespace sian {
namespace featurize {

template <typename T>
Array<T> rot90_grid(const Array<T>& in) {
  check(in.ndim() == 2, "rot90_grid: expected [H,W]");
  const int64_t h = in.dim(0), w = in.dim(1);
  Array<T> out({w, h});
  for (int64_t i = 0; i < w; ++i)
    for (int64_t j = 0; j < h; ++j) out[i * h + j] = in[j * w + (w - 1 - i)];
  return out;
}

template <typename T>
Array<T> flip_h_grid(const Array<T>& in) {
  check(in.ndim() == 2, "flip_h_grid: expected [H,W]");
  const int64_t h = in.dim(0), w = in.dim(1);
  Array<T> out({h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) out[y * w + x] = in[y * w + (w - 1 - x)];
  return out;
}

template <typename T>
Array<T> flip_v_grid(const Array<T>& in) {
  check(in.ndim() == 2, "flip_v_grid: expected [H,W]");
  const int64_t h = in.dim(0), w = in.dim(1);
  Array<T> out({h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) out[y * w + x] = in[(h - 1 - y) * w + x];
  return out;
}

template <typename T>
Array<T> rot90_chw(const Array<T>& in) {
  check(in.ndim() == 3, "rot90_chw: expected [C,H,W]");
  const int64_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  Array<T> out({c, w, h});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t i = 0; i < w; ++i)
      for (int64_t j = 0; j < h; ++j)
        out[(ch * w + i) * h + j] = in[(ch * h + j) * w + (w - 1 - i)];
  return out;
}

template <typename T>
Array<T> flip_h_chw(const Array<T>& in) {
  check(in.ndim() == 3, "flip_h_chw: expected [C,H,W]");
  const int64_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  Array<T> out(in.shape());
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x)
        out[(ch * h + y) * w + x] = in[(ch * h + y) * w + (w - 1 - x)];
  return out;
}

template <typename T>
Array<T> flip_v_chw(const Array<T>& in) {
  check(in.ndim() == 3, "flip_v_chw: expected [C,H,W]");
  const int64_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  Array<T> out(in.shape());
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x)
        out[(ch * h + y) * w + x] = in[(ch * h + (h - 1 - y)) * w + x];
  return out;
}

// Channel remaps for a 2-channel (dx, dy) field after the spatial transform
// has already been applied to the grid.
inline Array<float> remap_direction_rot90(const Array<float>& dir) {
  check(dir.ndim() == 3 && dir.dim(0) == 2, "remap_direction_rot90: expected [2,H,W]");
  const int64_t hw = dir.dim(1) * dir.dim(2);
  Array<float> out(dir.shape());
  for (int64_t i = 0; i < hw; ++i) {
    out[i] = dir[hw + i];    // dx' = dy
    out[hw + i] = -dir[i];   // dy' = -dx
  }
  return out;
}

inline Array<float> remap_direction_flip_h(const Array<float>& dir) {
  check(dir.ndim() == 3 && dir.dim(0) == 2, "remap_direction_flip_h: expected [2,H,W]");
  const int64_t hw = dir.dim(1) * dir.dim(2);
  Array<float> out = dir.clone();
  for (int64_t i = 0; i < hw; ++i) out[i] = -out[i];
  return out;
}

inline Array<float> remap_direction_flip_v(const Array<float>& dir) {
  check(dir.ndim() == 3 && dir.dim(0) == 2, "remap_direction_flip_v: expected [2,H,W]");
  const int64_t hw = dir.dim(1) * dir.dim(2);
  Array<float> out = dir.clone();
  for (int64_t i = 0; i < hw; ++i) out[hw + i] = -out[hw + i];
  return out;
}

}  // namespace featurize
}  // namespace sian

#endif  // SIAN_FEATURIZE_TRANSFORMS_HPP_
