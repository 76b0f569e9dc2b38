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

#include "sian/io/maps.hpp"

#include <fstream>

#include "sian/core/serialize.hpp"

namespace sian {
namespace io {
namespace {

constexpr char kMagic[] = "SIANMAPS";
constexpr uint16_t kVersion = 1;

}  // namespace

void save_maps(const std::string& path, const MapSet& maps) {
  std::ofstream os(path, std::ios::binary);
  check_runtime(os.good(), "cannot open for write: " + path);
  os.write(kMagic, 8);
  ser::put_u16(os, kVersion);
  ser::put_u32(os, static_cast<uint32_t>(maps.size()));
  for (const auto& [name, arr] : maps) {
    ser::put_string(os, name);
    ser::put_f32_array(os, arr);
  }
  check_runtime(os.good(), "write failed: " + path);
}

MapSet load_maps(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check_runtime(is.good(), "cannot open: " + path);
  char magic[8];
  is.read(magic, 8);
  check_runtime(is.gcount() == 8 && std::string(magic, 8) == kMagic,
                "not a map container: " + path);
  const uint16_t version = ser::get_u16(is);
  check_runtime(version == kVersion,
                "unsupported map container version in " + path);
  const uint32_t count = ser::get_u32(is);
  MapSet maps;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = ser::get_string(is);
    check_runtime(!maps.count(name), "duplicate map entry: " + name);
    maps.emplace(std::move(name), ser::get_f32_array(is));
  }
  return maps;
}

}  // namespace io
}  // namespace sian
