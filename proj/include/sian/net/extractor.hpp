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

#ifndef SIAN_NET_EXTRACTOR_HPP_
#define SIAN_NET_EXTRACTOR_HPP_

#include <string>
#include <vector>

#include "sian/net/layers.hpp"

namespace sian {
namespace net {

// Fixed (never trained) convolutional feature embedder used by the
// perceptual loss and by the distribution-distance metric. The weights are
// drawn once from a seeded generator, so results are hermetic and
// reproducible without downloading a pretrained classifier. Each layer is a
// stride-2 3x3 conv followed by ReLU; with `include_input` the raw image is
// prepended to the feature list as layer 0.
template <typename T>
class FeatureExtractor {
 public:
  FeatureExtractor(uint64_t seed, std::vector<int64_t> channels,
                   bool include_input, std::vector<double> layer_weights = {})
      : seed_(seed), channels_(std::move(channels)),
        include_input_(include_input), layer_weights_(std::move(layer_weights)) {
    check(!channels_.empty(), "extractor: needs at least one conv layer");
    Rng rng(seed_);
    int64_t cin = 3;
    for (int64_t cout : channels_) {
      check(cout > 0, "extractor: channel counts must be positive");
      convs_.push_back(Conv2dLayer<T>::make(rng, cin, cout, 3, 2, 1));
      // The extractor is frozen: gradients flow through it, never into it.
      convs_.back().w.set_requires_grad(false);
      convs_.back().b.set_requires_grad(false);
      cin = cout;
    }
    if (layer_weights_.empty())
      layer_weights_.assign(num_layers(), 1.0);
    check(static_cast<int64_t>(layer_weights_.size()) == num_layers(),
          "extractor: layer_weights must have one entry per feature layer");
  }

  int64_t num_layers() const {
    return static_cast<int64_t>(convs_.size()) + (include_input_ ? 1 : 0);
  }

  const std::vector<double>& layer_weights() const { return layer_weights_; }

  // Feature list for an image batch [N, 3, H, W]; H and W must stay positive
  // through all stride-2 layers.
  std::vector<Var<T>> features(Var<T> image) const {
    check(image.defined() && image.value().ndim() == 4 &&
              image.value().dim(1) == 3,
          "extractor: image must be [N,3,H,W]");
    std::vector<Var<T>> out;
    if (include_input_) out.push_back(image);
    Var<T> x = image;
    for (const auto& conv : convs_) {
      x = ops::relu(conv.forward(x));
      out.push_back(x);
    }
    return out;
  }

  // Embedding for the distribution-distance metric: the final conv feature
  // averaged over space, one row per image.
  Array<T> embed(const Array<T>& images) const {
    std::vector<Var<T>> feats = features(Var<T>::constant(images));
    const Array<T>& last = feats.back().value();
    const int64_t n = last.dim(0), c = last.dim(1);
    const int64_t hw = last.dim(2) * last.dim(3);
    Array<T> out({n, c});
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < c; ++j) {
        double acc = 0;
        const T* base = last.data() + (i * c + j) * hw;
        for (int64_t k = 0; k < hw; ++k) acc += static_cast<double>(base[k]);
        out.at(i, j) = static_cast<T>(acc / static_cast<double>(hw));
      }
    return out;
  }

  // Stable description recorded in metric reports, since absolute metric
  // values are only comparable within one extractor choice.
  std::string identity() const {
    std::string s = "randconv-seed" + std::to_string(seed_) + "-ch";
    for (size_t i = 0; i < channels_.size(); ++i)
      s += (i ? "x" : "") + std::to_string(channels_[i]);
    s += include_input_ ? "-in1" : "-in0";
    return s;
  }

 private:
  uint64_t seed_;
  std::vector<int64_t> channels_;
  bool include_input_;
  std::vector<double> layer_weights_;
  std::vector<Conv2dLayer<T>> convs_;
};

}  // namespace net
}  // namespace sian

#endif  // SIAN_NET_EXTRACTOR_HPP_
