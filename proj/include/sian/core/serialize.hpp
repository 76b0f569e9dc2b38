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

// Little-endian binary primitives shared by the map container and the
// checkpoint format. All multi-byte values are written byte-by-byte so the
// on-disk layout does not depend on host endianness.

#ifndef SIAN_CORE_SERIALIZE_HPP_
#define SIAN_CORE_SERIALIZE_HPP_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "sian/core/array.hpp"

namespace sian {
namespace ser {

inline void put_u8(std::ostream& os, uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void put_u16(std::ostream& os, uint16_t v) {
  for (int i = 0; i < 2; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u32(std::ostream& os, uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::ostream& os, uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_i64(std::ostream& os, int64_t v) {
  put_u64(os, static_cast<uint64_t>(v));
}

inline void put_f32(std::ostream& os, float v) {
  put_u32(os, std::bit_cast<uint32_t>(v));
}

inline void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<uint64_t>(v));
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline uint8_t get_u8(std::istream& is) {
  const int c = is.get();
  check_runtime(c != EOF, "binary stream: unexpected end of data");
  return static_cast<uint8_t>(c);
}

inline uint16_t get_u16(std::istream& is) {
  uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= static_cast<uint16_t>(get_u8(is)) << (8 * i);
  return v;
}

inline uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(get_u8(is)) << (8 * i);
  return v;
}

inline uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(get_u8(is)) << (8 * i);
  return v;
}

inline int64_t get_i64(std::istream& is) {
  return static_cast<int64_t>(get_u64(is));
}

inline float get_f32(std::istream& is) {
  return std::bit_cast<float>(get_u32(is));
}

inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_u64(is));
}

inline std::string get_string(std::istream& is) {
  const uint32_t n = get_u32(is);
  check_runtime(n <= (1u << 28), "binary stream: implausible string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  check_runtime(is.gcount() == static_cast<std::streamsize>(n),
                "binary stream: truncated string");
  return s;
}

// Tensor record: u8 ndim, i64 dims, f32 payload (element count implied).
inline void put_f32_array(std::ostream& os, const Array<float>& a) {
  put_u8(os, static_cast<uint8_t>(a.ndim()));
  for (int i = 0; i < a.ndim(); ++i) put_i64(os, a.dim(i));
  for (int64_t i = 0; i < a.size(); ++i) put_f32(os, a[i]);
}

inline Array<float> get_f32_array(std::istream& is) {
  const int nd = get_u8(is);
  check_runtime(nd >= 1 && nd <= 8, "tensor record: bad rank");
  Shape shape(static_cast<size_t>(nd));
  int64_t total = 1;
  for (int i = 0; i < nd; ++i) {
    shape[static_cast<size_t>(i)] = get_i64(is);
    check_runtime(shape[static_cast<size_t>(i)] >= 1 && total <= (1ll << 33),
                  "tensor record: bad dims");
    total *= shape[static_cast<size_t>(i)];
  }
  Array<float> a(shape);
  for (int64_t i = 0; i < total; ++i) a[i] = get_f32(is);
  return a;
}

}  // namespace ser
}  // namespace sian

#endif  // SIAN_CORE_SERIALIZE_HPP_
