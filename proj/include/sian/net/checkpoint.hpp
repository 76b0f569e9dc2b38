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

#ifndef SIAN_NET_CHECKPOINT_HPP_
#define SIAN_NET_CHECKPOINT_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "sian/core/array.hpp"
#include "sian/net/layers.hpp"

namespace sian {
namespace net {

// Versioned binary training-state container. Tensors are keyed by canonical
// parameter names ("gen.resblk3.branch_p.gamma_conv.weight" style);
// optimizer state uses the "opt." prefix. Writing the sorted maps makes
// re-saving an unchanged state byte-identical.
struct CheckpointData {
  std::string config_json;  // snapshot of the run configuration
  uint64_t step = 0;
  std::map<std::string, uint64_t> counters;
  std::map<std::string, std::array<uint64_t, 4>> rng_states;
  std::map<std::string, Array<float>> tensors;
};

// Serializes to a temporary file and renames into place.
void save_checkpoint(const std::string& path, const CheckpointData& data);

// Rejects bad magic, unknown versions, and truncated payloads.
CheckpointData load_checkpoint(const std::string& path);

// Snapshots parameter values into `out` under their canonical names.
template <typename T>
void store_params(const NamedVars<T>& params,
                  std::map<std::string, Array<float>>* out) {
  for (const auto& [name, var] : params) {
    check_runtime(out->emplace(name, var.value().template astype<float>())
                      .second,
                  "checkpoint: duplicate parameter name " + name);
  }
}

// Copies checkpoint tensors back into live parameters, enforcing that every
// parameter is present with the stored shape.
template <typename T>
void load_params(const std::map<std::string, Array<float>>& tensors,
                 NamedVars<T>* params) {
  for (auto& [name, var] : *params) {
    auto it = tensors.find(name);
    check_runtime(it != tensors.end(),
                  "checkpoint: missing parameter " + name);
    check_runtime(it->second.same_shape(var.value()),
                  "checkpoint: shape mismatch for " + name);
    Array<T>& dst = var.node()->value;
    for (int64_t i = 0; i < dst.size(); ++i)
      dst[i] = static_cast<T>(it->second[i]);
  }
}

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_CHECKPOINT_HPP_
