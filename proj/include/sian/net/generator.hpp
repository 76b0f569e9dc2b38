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

#ifndef SIAN_NET_GENERATOR_HPP_
#define SIAN_NET_GENERATOR_HPP_

#include <string>
#include <vector>

#include "sian/net/config.hpp"
#include "sian/net/resblock.hpp"

namespace sian {
namespace net {

// Mask- and style-conditioned image generator. A linear projection maps the
// style vector to a C0 x 2 x 2 seed; each residual block consumes the
// conditioning pyramid level at its input resolution and is followed by a
// 2x nearest-neighbor upsample; a final 3x3 conv plus tanh produces an RGB
// image in [-1, 1] at 2 * 2^num_blocks pixels.
template <typename T>
class Generator {
 public:
  explicit Generator(Rng& rng, const NetConfig& cfg) : cfg_(cfg) {
    validate(cfg);
    const int64_t c0 = cfg.gen_channels[0];
    fc_ = LinearLayer<T>::make(rng, cfg.style_dim, c0 * 2 * 2);
    int64_t in_ch = c0;
    for (int64_t i = 0; i < cfg.num_blocks(); ++i) {
      const int64_t out_ch = cfg.gen_channels[i];
      blocks_.emplace_back(rng, in_ch, out_ch, cfg.style_dim, cfg.sian_embed,
                           cfg.inst_on, cfg.style_on, cfg.skip_sian,
                           cfg.norm_eps);
      in_ch = out_ch;
    }
    final_conv_ = Conv2dLayer<T>::make(rng, in_ch, 3, 3, 1, 1);
  }

  // `style` is [N, style_dim]; `pyramid` holds one conditioning level per
  // block, level i at spatial size 2 * 2^i.
  Var<T> forward(Var<T> style, const std::vector<CondLevel<T>>& pyramid) const {
    check(style.defined() && style.value().ndim() == 2 &&
              style.value().dim(1) == cfg_.style_dim,
          "generator: style must be [N, style_dim]");
    check(static_cast<int64_t>(pyramid.size()) == cfg_.num_blocks(),
          "generator: pyramid must have one level per block");
    const int64_t n = style.value().dim(0);
    for (int64_t i = 0; i < cfg_.num_blocks(); ++i) {
      const int64_t r = cfg_.block_resolution(i);
      const Array<T>& m = pyramid[i].m;
      check(m.ndim() == 4 && m.dim(0) == n && m.dim(2) == r && m.dim(3) == r,
            "generator: pyramid level " + std::to_string(i) +
                " does not match resolution " + std::to_string(r));
    }
    Var<T> x = ops::reshape(fc_.forward(style),
                            {n, cfg_.gen_channels[0], 2, 2});
    for (size_t i = 0; i < blocks_.size(); ++i) {
      x = blocks_[i].forward(x, pyramid[i], style);
      x = ops::upsample_nearest2x(x);
    }
    return ops::tanh_(final_conv_.forward(x));
  }

  void collect(NamedVars<T>* out) const {
    fc_.collect("gen.fc", out);
    for (size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].collect("gen.resblk" + std::to_string(i), out);
    final_conv_.collect("gen.final_conv", out);
  }

  const NetConfig& config() const { return cfg_; }

 private:
  NetConfig cfg_;
  LinearLayer<T> fc_;
  std::vector<SianResBlock<T>> blocks_;
  Conv2dLayer<T> final_conv_;
};

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_GENERATOR_HPP_
