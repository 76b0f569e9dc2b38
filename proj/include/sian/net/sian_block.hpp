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

#ifndef SIAN_NET_SIAN_BLOCK_HPP_
#define SIAN_NET_SIAN_BLOCK_HPP_

#include <string>
#include <utility>
#include <vector>

#include "sian/core/autograd.hpp"
#include "sian/core/ops.hpp"
#include "sian/net/layers.hpp"

namespace sian {
namespace net {

// One pyramid level of conditioning inputs, batched N-first. `m` is the
// two-channel one-hot semantic map, `p` the two-channel unit direction field
// toward instance centroids, and `q` the single-channel normalized distance
// field to the instance boundary.
template <typename T>
struct CondLevel {
  Array<T> m;  // [N, 2, H, W]
  Array<T> p;  // [N, 2, H, W]
  Array<T> q;  // [N, 1, H, W]
};

// Style- and instance-adaptive normalization. The input activation is
// standardized with parameter-free per-channel batch statistics and then
// modulated with a learned scale and shift:
//
//   out = gamma(M, S, P, Q) * (h - mean_c) / std_c + beta(M, S, P, Q)
//
// gamma and beta are each the elementwise sum of two branch outputs: one
// branch conditioned on the direction field P, the other on the distance
// field Q. Each branch computes
//
//   sem   = conv3x3(M)                    (semantization)
//   x     = conv3x3(sem * affine(S))      (stylization: per-channel scaling)
//   x     = x * conv1x1(P or Q)           (instantiation)
//   x     = conv3x3(x)                    (compensation)
//   gamma = conv3x3(x), beta = conv3x3(x) (modulation)
//
// Scaling the conv input channels by affine(S) is exactly equivalent to
// scaling the kernel's input-channel slices, because convolution is linear
// per input channel. The `style_on` / `inst_on` switches force the affine
// scale / the instance multiplication to one, which makes the output exactly
// independent of S / of P and Q.
template <typename T>
class SianBlock {
 public:
  SianBlock() = default;

  SianBlock(Rng& rng, int64_t channels, int64_t style_dim, int64_t embed,
            bool inst_on, bool style_on, double eps)
      : channels_(channels), inst_on_(inst_on), style_on_(style_on),
        eps_(eps) {
    branch_p_ = make_branch(rng, /*layout_channels=*/2, channels, style_dim,
                            embed);
    branch_q_ = make_branch(rng, /*layout_channels=*/1, channels, style_dim,
                            embed);
  }

  // Modulation parameters of a single branch; `which` selects 0 for the
  // direction branch and 1 for the distance branch.
  std::pair<Var<T>, Var<T>> branch_modulation(int which,
                                              const CondLevel<T>& cond,
                                              Var<T> style) const {
    const Branch& br = which == 0 ? branch_p_ : branch_q_;
    const Array<T>& layout = which == 0 ? cond.p : cond.q;
    Var<T> x = br.sem_conv.forward(Var<T>::constant(cond.m));
    if (style_on_) x = ops::scale_channels(x, br.style_affine.forward(style));
    x = br.style_conv.forward(x);
    if (inst_on_)
      x = ops::mul(x, br.inst_conv.forward(Var<T>::constant(layout)));
    x = br.comp_conv.forward(x);
    return {br.gamma_conv.forward(x), br.beta_conv.forward(x)};
  }

  // Fused modulation: the elementwise sum of both branches.
  std::pair<Var<T>, Var<T>> modulation(const CondLevel<T>& cond,
                                       Var<T> style) const {
    auto [gp, bp] = branch_modulation(0, cond, style);
    auto [gq, bq] = branch_modulation(1, cond, style);
    return {ops::add(gp, gq), ops::add(bp, bq)};
  }

  Var<T> forward(Var<T> h, const CondLevel<T>& cond, Var<T> style) const {
    check(h.defined() && h.value().ndim() == 4,
          "sian block: activation must be [N,C,H,W]");
    check(h.value().dim(1) == channels_,
          "sian block: activation channel count mismatch");
    check_cond_shapes(h.value(), cond);
    check(h.value().all_finite(), "sian block: non-finite activation");
    check(cond.m.all_finite() && cond.p.all_finite() && cond.q.all_finite(),
          "sian block: non-finite conditioning maps");
    Var<T> normed =
        ops::moment_normalize(h, static_cast<T>(eps_), ops::NormMode::kBatch);
    auto [gamma, beta] = modulation(cond, style);
    return ops::add(ops::mul(gamma, normed), beta);
  }

  void collect(const std::string& prefix, NamedVars<T>* out) const {
    collect_branch(branch_p_, prefix + ".branch_p", out);
    collect_branch(branch_q_, prefix + ".branch_q", out);
  }

  int64_t channels() const { return channels_; }

 private:
  struct Branch {
    Conv2dLayer<T> sem_conv;     // one-hot semantic map -> embed
    LinearLayer<T> style_affine;  // style vector -> per-channel scales
    Conv2dLayer<T> style_conv;   // embed -> embed, style-scaled input
    Conv2dLayer<T> inst_conv;    // instance layout -> embed, 1x1
    Conv2dLayer<T> comp_conv;    // embed -> embed
    Conv2dLayer<T> gamma_conv;   // embed -> activation channels
    Conv2dLayer<T> beta_conv;    // embed -> activation channels
  };

  Branch make_branch(Rng& rng, int64_t layout_channels, int64_t channels,
                     int64_t style_dim, int64_t embed) {
    Branch br;
    br.sem_conv = Conv2dLayer<T>::make(rng, 2, embed, 3, 1, 1);
    // Bias 1 so an uninformative style leaves the kernels unscaled.
    br.style_affine = LinearLayer<T>::make(rng, style_dim, embed, T(1));
    br.style_conv = Conv2dLayer<T>::make(rng, embed, embed, 3, 1, 1);
    br.inst_conv = Conv2dLayer<T>::make(rng, layout_channels, embed, 1, 1, 0);
    br.comp_conv = Conv2dLayer<T>::make(rng, embed, embed, 3, 1, 1);
    // gamma starts at 1 and beta at 0 so a fresh block is approximately a
    // plain standardization, which keeps early training stable.
    br.gamma_conv = Conv2dLayer<T>::make(rng, embed, channels, 3, 1, 1, T(1));
    br.beta_conv = Conv2dLayer<T>::make(rng, embed, channels, 3, 1, 1, T(0));
    return br;
  }

  void check_cond_shapes(const Array<T>& h, const CondLevel<T>& cond) const {
    const int64_t n = h.dim(0), hh = h.dim(2), ww = h.dim(3);
    auto match = [&](const Array<T>& map, int64_t want_c, const char* tag) {
      check(map.ndim() == 4 && map.dim(0) == n && map.dim(1) == want_c &&
                map.dim(2) == hh && map.dim(3) == ww,
            std::string("sian block: conditioning map '") + tag +
                "' does not match the activation shape");
    };
    match(cond.m, 2, "semantic");
    match(cond.p, 2, "direction");
    match(cond.q, 1, "distance");
  }

  static void collect_branch(const Branch& br, const std::string& prefix,
                             NamedVars<T>* out) {
    br.sem_conv.collect(prefix + ".sem_conv", out);
    br.style_affine.collect(prefix + ".style_affine", out);
    br.style_conv.collect(prefix + ".style_conv", out);
    br.inst_conv.collect(prefix + ".inst_conv", out);
    br.comp_conv.collect(prefix + ".comp_conv", out);
    br.gamma_conv.collect(prefix + ".gamma_conv", out);
    br.beta_conv.collect(prefix + ".beta_conv", out);
  }

  int64_t channels_ = 0;
  bool inst_on_ = true;
  bool style_on_ = true;
  double eps_ = 1e-5;
  Branch branch_p_;
  Branch branch_q_;
};

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_SIAN_BLOCK_HPP_
