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

#include "sian/io/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

namespace sian {
namespace io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  check_runtime(f != nullptr, "cannot open " + path);
  return f;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

}  // namespace

Array<uint8_t> read_rgb8_png(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check_runtime(r.png != nullptr, "png: allocation failure");
  r.info = png_create_info_struct(r.png);
  check_runtime(r.info != nullptr, "png: allocation failure");
  if (setjmp(png_jmpbuf(r.png))) fail_runtime("png: failed to decode " + path);
  png_init_io(r.png, f.get());
  png_read_info(r.png, r.info);

  // Normalize any input layout to 8-bit RGB.
  png_set_expand(r.png);
  if (png_get_bit_depth(r.png, r.info) == 16) png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  const png_byte color = png_get_color_type(r.png, r.info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);

  const int64_t h = png_get_image_height(r.png, r.info);
  const int64_t w = png_get_image_width(r.png, r.info);
  check_runtime(h >= 1 && w >= 1, "png: empty image " + path);
  check_runtime(png_get_rowbytes(r.png, r.info) == static_cast<size_t>(w * 3),
                "png: unexpected row layout in " + path);

  Array<uint8_t> img({h, w, 3});
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int64_t y = 0; y < h; ++y)
    rows[static_cast<size_t>(y)] = img.data() + y * w * 3;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

void write_rgb8_png(const std::string& path, const Array<uint8_t>& img) {
  check(img.ndim() == 3 && img.dim(2) == 3, "write_rgb8_png: expected [H,W,3]");
  FilePtr f = open_file(path, "wb");
  PngWriter wr;
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check_runtime(wr.png != nullptr, "png: allocation failure");
  wr.info = png_create_info_struct(wr.png);
  check_runtime(wr.info != nullptr, "png: allocation failure");
  if (setjmp(png_jmpbuf(wr.png))) fail_runtime("png: failed to encode " + path);
  png_init_io(wr.png, f.get());
  const int64_t h = img.dim(0), w = img.dim(1);
  png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  for (int64_t y = 0; y < h; ++y)
    png_write_row(wr.png, const_cast<png_bytep>(img.data() + y * w * 3));
  png_write_end(wr.png, nullptr);
}

Array<uint16_t> read_gray16_png(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check_runtime(r.png != nullptr, "png: allocation failure");
  r.info = png_create_info_struct(r.png);
  check_runtime(r.info != nullptr, "png: allocation failure");
  if (setjmp(png_jmpbuf(r.png))) fail_runtime("png: failed to decode " + path);
  png_init_io(r.png, f.get());
  png_read_info(r.png, r.info);

  check_runtime(png_get_color_type(r.png, r.info) == PNG_COLOR_TYPE_GRAY &&
                    png_get_bit_depth(r.png, r.info) == 16,
                "mask must be 16-bit grayscale: " + path);
  const int64_t h = png_get_image_height(r.png, r.info);
  const int64_t w = png_get_image_width(r.png, r.info);
  check_runtime(h >= 1 && w >= 1, "png: empty image " + path);

  // PNG stores 16-bit samples big-endian; assemble explicitly.
  std::vector<uint8_t> raw(static_cast<size_t>(h * w * 2));
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int64_t y = 0; y < h; ++y)
    rows[static_cast<size_t>(y)] = raw.data() + y * w * 2;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);

  Array<uint16_t> img({h, w});
  for (int64_t i = 0; i < h * w; ++i)
    img[i] = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  return img;
}

void write_gray16_png(const std::string& path, const Array<uint16_t>& img) {
  check(img.ndim() == 2, "write_gray16_png: expected [H,W]");
  FilePtr f = open_file(path, "wb");
  PngWriter wr;
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check_runtime(wr.png != nullptr, "png: allocation failure");
  wr.info = png_create_info_struct(wr.png);
  check_runtime(wr.info != nullptr, "png: allocation failure");
  if (setjmp(png_jmpbuf(wr.png))) fail_runtime("png: failed to encode " + path);
  png_init_io(wr.png, f.get());
  const int64_t h = img.dim(0), w = img.dim(1);
  png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  std::vector<uint8_t> row(static_cast<size_t>(w * 2));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      const uint16_t v = img[y * w + x];
      row[static_cast<size_t>(2 * x)] = static_cast<uint8_t>(v >> 8);
      row[static_cast<size_t>(2 * x + 1)] = static_cast<uint8_t>(v & 0xff);
    }
    png_write_row(wr.png, row.data());
  }
  png_write_end(wr.png, nullptr);
}

}  // namespace io
}  // namespace sian
