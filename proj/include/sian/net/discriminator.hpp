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

#ifndef SIAN_NET_DISCRIMINATOR_HPP_
#define SIAN_NET_DISCRIMINATOR_HPP_

#include <string>
#include <vector>

#include "sian/net/config.hpp"
#include "sian/net/sian_block.hpp"

namespace sian {
namespace net {

template <typename T>
struct ScaleOutput {
  Var<T> logits;                  // [N, 1, Hp, Wp] patch logits
  std::vector<Var<T>> features;   // activated output of every conv layer
};

// Multi-scale patch discriminator. Each scale owns an independent stack of
// 4x4 convs (strides 2,2,2,1, filters ndf..8*ndf, instance norm on the
// middle layers, LeakyReLU 0.2) ending in a stride-1 conv to a single-channel
// patch logit map. Scale s sees the input 2x-average-pooled s times. The
// input is the channel concatenation of the image and the conditioning maps
// (semantic only, or semantic + direction + distance when `disc_sees_pq`).
template <typename T>
class Discriminator {
 public:
  explicit Discriminator(Rng& rng, const NetConfig& cfg) : cfg_(cfg) {
    validate(cfg);
    const int64_t in_ch = 3 + 2 + (cfg.disc_sees_pq ? 3 : 0);
    for (int64_t s = 0; s < cfg.disc_scales; ++s) {
      Scale scale;
      int64_t cin = in_ch;
      int64_t mult = 1;
      for (int64_t l = 0; l < cfg.disc_layers; ++l) {
        const int64_t cout = cfg.ndf * mult;
        const int64_t stride = l + 1 < cfg.disc_layers ? 2 : 1;
        scale.convs.push_back(
            Conv2dLayer<T>::make(rng, cin, cout, 4, stride, 1));
        cin = cout;
        mult = std::min<int64_t>(mult * 2, 8);
      }
      scale.final = Conv2dLayer<T>::make(rng, cin, 1, 4, 1, 1);
      scales_.push_back(std::move(scale));
    }
  }

  std::vector<ScaleOutput<T>> forward(Var<T> image,
                                      const CondLevel<T>& cond) const {
    check(image.defined() && image.value().ndim() == 4 &&
              image.value().dim(1) == 3,
          "discriminator: image must be [N,3,H,W]");
    const int64_t n = image.value().dim(0);
    const int64_t h = image.value().dim(2), w = image.value().dim(3);
    check(cond.m.ndim() == 4 && cond.m.dim(0) == n && cond.m.dim(2) == h &&
              cond.m.dim(3) == w,
          "discriminator: conditioning maps must align with the image");
    std::vector<Var<T>> parts = {image, Var<T>::constant(cond.m)};
    if (cfg_.disc_sees_pq) {
      parts.push_back(Var<T>::constant(cond.p));
      parts.push_back(Var<T>::constant(cond.q));
    }
    Var<T> x = ops::concat_channels(parts);

    std::vector<ScaleOutput<T>> out;
    for (size_t s = 0; s < scales_.size(); ++s) {
      if (s > 0) x = ops::avgpool2x2(x);
      ScaleOutput<T> so;
      Var<T> y = x;
      for (size_t l = 0; l < scales_[s].convs.size(); ++l) {
        y = scales_[s].convs[l].forward(y);
        if (l > 0)
          y = ops::moment_normalize(y, static_cast<T>(cfg_.norm_eps),
                                    ops::NormMode::kInstance);
        y = ops::leaky_relu(y, T(0.2));
        so.features.push_back(y);
      }
      so.logits = scales_[s].final.forward(y);
      out.push_back(std::move(so));
    }
    return out;
  }

  void collect(NamedVars<T>* out) const {
    for (size_t s = 0; s < scales_.size(); ++s) {
      const std::string prefix = "disc.scale" + std::to_string(s);
      for (size_t l = 0; l < scales_[s].convs.size(); ++l)
        scales_[s].convs[l].collect(prefix + ".conv" + std::to_string(l),
                                    out);
      scales_[s].final.collect(prefix + ".final", out);
    }
  }

 private:
  struct Scale {
    std::vector<Conv2dLayer<T>> convs;
    Conv2dLayer<T> final;
  };

  NetConfig cfg_;
  std::vector<Scale> scales_;
};

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_DISCRIMINATOR_HPP_
