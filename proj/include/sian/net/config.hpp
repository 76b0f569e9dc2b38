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

#ifndef SIAN_NET_CONFIG_HPP_
#define SIAN_NET_CONFIG_HPP_

#include <cstdint>
#include <vector>

#include "sian/core/array.hpp"

namespace sian {
namespace net {

// Architecture hyper-parameters shared by the generator, encoder and
// discriminator. The generator starts from a 2x2 seed and doubles the
// resolution after every residual block, so the output size is
// 2 * 2^num_blocks and `gen_channels` lists each block's output channels.
struct NetConfig {
  int64_t style_dim = 64;   // dimensionality of the encoded style vector
  int64_t sian_embed = 64;  // filter count of the convs inside a SIAN block
  std::vector<int64_t> gen_channels = {256, 256, 128, 64, 32};
  int64_t image_size = 64;
  int64_t ndf = 32;  // discriminator base filter count
  int64_t nef = 32;  // encoder base filter count
  int64_t disc_scales = 2;
  int64_t disc_layers = 4;

  // Ablation switches. `inst_on` gates the instance-layout multiplications,
  // `style_on` gates the per-channel style scaling inside SIAN blocks,
  // `disc_sees_pq` selects whether the discriminator is conditioned on the
  // direction/distance maps in addition to the semantic map, and `skip_sian`
  // keeps the normalization block on the residual skip path.
  bool inst_on = true;
  bool style_on = true;
  bool disc_sees_pq = true;
  bool skip_sian = true;

  double norm_eps = 1e-5;

  int64_t num_blocks() const {
    return static_cast<int64_t>(gen_channels.size());
  }
  // Spatial side length at the input of block `i`.
  int64_t block_resolution(int64_t i) const { return int64_t{2} << i; }
};

inline void validate(const NetConfig& c) {
  check(c.style_dim > 0, "config: style_dim must be positive");
  check(c.sian_embed > 0, "config: sian_embed must be positive");
  check(!c.gen_channels.empty(), "config: gen_channels must be non-empty");
  for (int64_t ch : c.gen_channels)
    check(ch > 0, "config: generator channels must be positive");
  check(c.ndf > 0 && c.nef > 0, "config: filter counts must be positive");
  check(c.disc_scales >= 1 && c.disc_layers >= 2,
        "config: discriminator needs at least 1 scale and 2 layers");
  check(c.norm_eps > 0, "config: norm_eps must be positive");
  check(c.image_size == (int64_t{2} << c.num_blocks()),
        "config: image_size must equal 2 * 2^num_blocks");
  check(c.image_size >= 16, "config: image_size must be at least 16");
}

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_CONFIG_HPP_
