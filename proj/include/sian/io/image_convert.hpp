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

#ifndef SIAN_IO_IMAGE_CONVERT_HPP_
#define SIAN_IO_IMAGE_CONVERT_HPP_

#include <cmath>

#include "sian/core/array.hpp"

namespace sian {
namespace io {

// [H,W,3] u8 -> [3,H,W] float in [-1,1]: x / 127.5 - 1.
inline Array<float> u8_to_float_chw(const Array<uint8_t>& img) {
  check(img.ndim() == 3 && img.dim(2) == 3, "u8_to_float_chw: expected [H,W,3]");
  const int64_t h = img.dim(0), w = img.dim(1);
  Array<float> out({3, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c)
        out[(c * h + y) * w + x] =
            static_cast<float>(img[(y * w + x) * 3 + c]) / 127.5f - 1.0f;
  return out;
}

// [3,H,W] float -> [H,W,3] u8: clamp(round((x + 1) * 127.5), 0, 255).
inline Array<uint8_t> float_chw_to_u8(const Array<float>& img) {
  check(img.ndim() == 3 && img.dim(0) == 3, "float_chw_to_u8: expected [3,H,W]");
  const int64_t h = img.dim(1), w = img.dim(2);
  Array<uint8_t> out({h, w, 3});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        const float v = (img[(c * h + y) * w + x] + 1.0f) * 127.5f;
        const long q = std::lroundf(v);
        out[(y * w + x) * 3 + c] =
            static_cast<uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q));
      }
  return out;
}

// [0,1] SSIM-style range helpers used by the evaluation pipeline.
inline Array<float> u8_to_unit_chw(const Array<uint8_t>& img) {
  check(img.ndim() == 3 && img.dim(2) == 3, "u8_to_unit_chw: expected [H,W,3]");
  const int64_t h = img.dim(0), w = img.dim(1);
  Array<float> out({3, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c)
        out[(c * h + y) * w + x] =
            static_cast<float>(img[(y * w + x) * 3 + c]) / 255.0f;
  return out;
}

// Map a tanh-range image ([-1,1]) to the metric range ([0,1]).
inline Array<float> tanh_to_unit(const Array<float>& img) {
  Array<float> out(img.shape());
  for (int64_t i = 0; i < img.size(); ++i) {
    float v = (img[i] + 1.0f) * 0.5f;
    out[i] = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }
  return out;
}

}  // namespace io
}  // namespace sian

#endif  // SIAN_IO_IMAGE_CONVERT_HPP_
