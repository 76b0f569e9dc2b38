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

#include "sian/net/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "sian/core/serialize.hpp"

namespace sian {
namespace net {

namespace {
constexpr char kMagic[8] = {'S', 'I', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr uint16_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    check_runtime(out.good(), "checkpoint: cannot open " + tmp);
    out.write(kMagic, sizeof(kMagic));
    ser::put_u16(out, kVersion);
    ser::put_string(out, data.config_json);
    ser::put_u64(out, data.step);
    ser::put_u32(out, static_cast<uint32_t>(data.counters.size()));
    for (const auto& [name, value] : data.counters) {
      ser::put_string(out, name);
      ser::put_u64(out, value);
    }
    ser::put_u32(out, static_cast<uint32_t>(data.rng_states.size()));
    for (const auto& [name, state] : data.rng_states) {
      ser::put_string(out, name);
      for (uint64_t word : state) ser::put_u64(out, word);
    }
    ser::put_u32(out, static_cast<uint32_t>(data.tensors.size()));
    for (const auto& [name, tensor] : data.tensors) {
      ser::put_string(out, name);
      ser::put_f32_array(out, tensor);
    }
    check_runtime(out.good(), "checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_runtime(in.good(), "checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  check_runtime(in.gcount() == sizeof(magic) &&
                    std::equal(magic, magic + 8, kMagic),
                "checkpoint: bad magic in " + path);
  const uint16_t version = ser::get_u16(in);
  check_runtime(version == kVersion,
                "checkpoint: unsupported version " + std::to_string(version));
  CheckpointData data;
  data.config_json = ser::get_string(in);
  data.step = ser::get_u64(in);
  const uint32_t n_counters = ser::get_u32(in);
  for (uint32_t i = 0; i < n_counters; ++i) {
    std::string name = ser::get_string(in);
    data.counters[name] = ser::get_u64(in);
  }
  const uint32_t n_rngs = ser::get_u32(in);
  for (uint32_t i = 0; i < n_rngs; ++i) {
    std::string name = ser::get_string(in);
    std::array<uint64_t, 4> state;
    for (uint64_t& word : state) word = ser::get_u64(in);
    data.rng_states[name] = state;
  }
  const uint32_t n_tensors = ser::get_u32(in);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = ser::get_string(in);
    data.tensors[name] = ser::get_f32_array(in);
  }
  return data;
}

}  // namespace net
}  // namespace sian
