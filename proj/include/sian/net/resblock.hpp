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

#ifndef SIAN_NET_RESBLOCK_HPP_
#define SIAN_NET_RESBLOCK_HPP_

#include <algorithm>
#include <string>

#include "sian/net/sian_block.hpp"

namespace sian {
namespace net {

// Residual block built from SIAN normalization. The main path applies
// (SIAN -> ReLU -> conv3x3) twice through a bottleneck of
// min(in_channels, out_channels); the skip path applies
// SIAN -> ReLU -> conv1x1. The output is the elementwise sum of both paths.
// With `skip_sian` disabled the skip path degenerates to a plain conv1x1.
template <typename T>
class SianResBlock {
 public:
  SianResBlock() = default;

  SianResBlock(Rng& rng, int64_t in_ch, int64_t out_ch, int64_t style_dim,
               int64_t embed, bool inst_on, bool style_on, bool skip_sian,
               double eps)
      : skip_sian_(skip_sian) {
    const int64_t mid = std::min(in_ch, out_ch);
    sian1_ = SianBlock<T>(rng, in_ch, style_dim, embed, inst_on, style_on,
                          eps);
    conv1_ = Conv2dLayer<T>::make(rng, in_ch, mid, 3, 1, 1);
    sian2_ = SianBlock<T>(rng, mid, style_dim, embed, inst_on, style_on, eps);
    conv2_ = Conv2dLayer<T>::make(rng, mid, out_ch, 3, 1, 1);
    skip_sian_block_ =
        SianBlock<T>(rng, in_ch, style_dim, embed, inst_on, style_on, eps);
    skip_conv_ = Conv2dLayer<T>::make(rng, in_ch, out_ch, 1, 1, 0);
  }

  Var<T> forward(Var<T> h, const CondLevel<T>& cond, Var<T> style) const {
    Var<T> x = conv1_.forward(ops::relu(sian1_.forward(h, cond, style)));
    x = conv2_.forward(ops::relu(sian2_.forward(x, cond, style)));
    Var<T> skip =
        skip_sian_
            ? skip_conv_.forward(
                  ops::relu(skip_sian_block_.forward(h, cond, style)))
            : skip_conv_.forward(h);
    return ops::add(x, skip);
  }

  void collect(const std::string& prefix, NamedVars<T>* out) const {
    sian1_.collect(prefix + ".sian1", out);
    conv1_.collect(prefix + ".conv1", out);
    sian2_.collect(prefix + ".sian2", out);
    conv2_.collect(prefix + ".conv2", out);
    skip_sian_block_.collect(prefix + ".skip_sian", out);
    skip_conv_.collect(prefix + ".skip_conv", out);
  }

 private:
  bool skip_sian_ = true;
  SianBlock<T> sian1_;
  Conv2dLayer<T> conv1_;
  SianBlock<T> sian2_;
  Conv2dLayer<T> conv2_;
  SianBlock<T> skip_sian_block_;
  Conv2dLayer<T> skip_conv_;
};

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_RESBLOCK_HPP_
