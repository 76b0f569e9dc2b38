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

// Versioned binary container for named float32 condition maps
// (magic "SIANMAPS"). Entries are stored sorted by name so files are
// byte-identical across runs.

#ifndef SIAN_IO_MAPS_HPP_
#define SIAN_IO_MAPS_HPP_

#include <map>
#include <string>

#include "sian/core/array.hpp"

namespace sian {
namespace io {

using MapSet = std::map<std::string, Array<float>>;

void save_maps(const std::string& path, const MapSet& maps);
MapSet load_maps(const std::string& path);

}  // namespace io
}  // namespace sian

#endif  // SIAN_IO_MAPS_HPP_
