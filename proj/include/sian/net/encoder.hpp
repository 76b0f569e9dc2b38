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

#ifndef SIAN_NET_ENCODER_HPP_
#define SIAN_NET_ENCODER_HPP_

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "sian/net/config.hpp"
#include "sian/net/layers.hpp"

namespace sian {
namespace net {

// Encoded style distribution and, once reparameterized, the style sample the
// generator consumes.
template <typename T>
struct StyleVector {
  Var<T> mu;      // [N, D]
  Var<T> logvar;  // [N, D]
  Var<T> sample;  // [N, D], mu + exp(logvar / 2) * eps
};

// sample = mu + exp(logvar / 2) * eps with eps drawn i.i.d. standard normal
// from `rng`. The drawn eps is stored in `eps_out` when provided so a step
// can be replayed exactly.
template <typename T>
Var<T> reparameterize(Var<T> mu, Var<T> logvar, Rng& rng,
                      Array<T>* eps_out = nullptr) {
  check(mu.defined() && logvar.defined() &&
            mu.value().same_shape(logvar.value()),
        "reparameterize: mu and logvar must have equal shapes");
  Array<T> eps(mu.shape());
  for (int64_t i = 0; i < eps.size(); ++i)
    eps[i] = static_cast<T>(rng.normal());
  if (eps_out != nullptr) *eps_out = eps.clone();
  Var<T> std_dev = ops::exp_(ops::mul_scalar(logvar, T(0.5)));
  return ops::add(mu, ops::mul(std_dev, Var<T>::constant(eps)));
}

// Variational style encoder: a stack of stride-2 3x3 convs with instance
// normalization and LeakyReLU(0.2) reduces the image to 4x4, followed by two
// linear heads for mu and logvar. Filter counts double per layer, capped at
// 8x the base.
template <typename T>
class Encoder {
 public:
  explicit Encoder(Rng& rng, const NetConfig& cfg) : cfg_(cfg) {
    validate(cfg);
    int64_t in_ch = 3;
    int64_t size = cfg.image_size;
    int64_t mult = 1;
    while (size > 4) {
      const int64_t out_ch = cfg.nef * mult;
      convs_.push_back(Conv2dLayer<T>::make(rng, in_ch, out_ch, 3, 2, 1));
      in_ch = out_ch;
      mult = std::min<int64_t>(mult * 2, 8);
      size /= 2;
    }
    flat_dim_ = in_ch * 4 * 4;
    mu_head_ = LinearLayer<T>::make(rng, flat_dim_, cfg.style_dim);
    logvar_head_ = LinearLayer<T>::make(rng, flat_dim_, cfg.style_dim);
  }

  // image is [N, 3, image_size, image_size] in [-1, 1].
  std::pair<Var<T>, Var<T>> forward(Var<T> image) const {
    check(image.defined() && image.value().ndim() == 4,
          "encoder: image must be [N,3,H,W]");
    check(image.value().dim(1) == 3, "encoder: image must have 3 channels");
    check(image.value().dim(2) == cfg_.image_size &&
              image.value().dim(3) == cfg_.image_size,
          "encoder: image spatial size must match the configured size");
    Var<T> x = image;
    for (const auto& conv : convs_) {
      x = conv.forward(x);
      x = ops::moment_normalize(x, static_cast<T>(cfg_.norm_eps),
                                ops::NormMode::kInstance);
      x = ops::leaky_relu(x, T(0.2));
    }
    x = ops::reshape(x, {image.value().dim(0), flat_dim_});
    return {mu_head_.forward(x), logvar_head_.forward(x)};
  }

  void collect(NamedVars<T>* out) const {
    for (size_t i = 0; i < convs_.size(); ++i)
      convs_[i].collect("enc.conv" + std::to_string(i), out);
    mu_head_.collect("enc.mu", out);
    logvar_head_.collect("enc.logvar", out);
  }

 private:
  NetConfig cfg_;
  std::vector<Conv2dLayer<T>> convs_;
  int64_t flat_dim_ = 0;
  LinearLayer<T> mu_head_;
  LinearLayer<T> logvar_head_;
};

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_ENCODER_HPP_
