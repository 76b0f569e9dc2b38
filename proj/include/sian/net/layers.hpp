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

#ifndef SIAN_NET_LAYERS_HPP_
#define SIAN_NET_LAYERS_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sian/core/autograd.hpp"
#include "sian/core/ops.hpp"
#include "sian/core/rng.hpp"

namespace sian {
namespace net {

// Ordered list of (canonical name, parameter) pairs; the ordering is the
// construction order, which is deterministic for a fixed architecture.
template <typename T>
using NamedVars = std::vector<std::pair<std::string, Var<T>>>;

// Fills an array with zero-mean Gaussians scaled by fan-in.
template <typename T>
Array<T> he_init(Rng& rng, const Shape& shape, int64_t fan_in) {
  Array<T> out(shape);
  const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (int64_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<T>(rng.normal() * std_dev);
  return out;
}

template <typename T>
struct Conv2dLayer {
  Var<T> w;  // [Cout, Cin, K, K]
  Var<T> b;  // [Cout]
  int64_t stride = 1;
  int64_t pad = 1;

  static Conv2dLayer make(Rng& rng, int64_t cin, int64_t cout, int64_t k,
                          int64_t stride, int64_t pad, T bias_init = T(0)) {
    Conv2dLayer layer;
    layer.w = Var<T>::leaf(he_init<T>(rng, {cout, cin, k, k}, cin * k * k),
                           /*requires_grad=*/true);
    layer.b = Var<T>::leaf(Array<T>::full({cout}, bias_init),
                           /*requires_grad=*/true);
    layer.stride = stride;
    layer.pad = pad;
    return layer;
  }

  Var<T> forward(Var<T> x) const { return ops::conv2d(x, w, b, stride, pad); }

  void collect(const std::string& prefix, NamedVars<T>* out) const {
    out->emplace_back(prefix + ".weight", w);
    out->emplace_back(prefix + ".bias", b);
  }
};

template <typename T>
struct LinearLayer {
  Var<T> w;  // [Dout, Din]
  Var<T> b;  // [Dout]

  static LinearLayer make(Rng& rng, int64_t din, int64_t dout,
                          T bias_init = T(0)) {
    LinearLayer layer;
    layer.w = Var<T>::leaf(he_init<T>(rng, {dout, din}, din),
                           /*requires_grad=*/true);
    layer.b = Var<T>::leaf(Array<T>::full({dout}, bias_init),
                           /*requires_grad=*/true);
    return layer;
  }

  Var<T> forward(Var<T> x) const { return ops::linear(x, w, b); }

  void collect(const std::string& prefix, NamedVars<T>* out) const {
    out->emplace_back(prefix + ".weight", w);
    out->emplace_back(prefix + ".bias", b);
  }
};

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_LAYERS_HPP_
