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

#ifndef SIAN_IO_PNG_IO_HPP_
#define SIAN_IO_PNG_IO_HPP_

#include <string>

#include "sian/core/array.hpp"

namespace sian {
namespace io {

// 8-bit color image as [H, W, 3]. Palette, gray, and alpha inputs are
// normalized to RGB on read. Throws std::runtime_error on I/O or decode
// failure.
Array<uint8_t> read_rgb8_png(const std::string& path);
void write_rgb8_png(const std::string& path, const Array<uint8_t>& img);

// 16-bit single-channel label mask as [H, W]. The file must be 16-bit
// grayscale; anything else is a format error.
Array<uint16_t> read_gray16_png(const std::string& path);
void write_gray16_png(const std::string& path, const Array<uint16_t>& img);

}  // namespace io
}  // namespace sian

#endif  // SIAN_IO_PNG_IO_HPP_
