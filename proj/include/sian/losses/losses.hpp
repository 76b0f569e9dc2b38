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

#ifndef SIAN_LOSSES_LOSSES_HPP_
#define SIAN_LOSSES_LOSSES_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "sian/core/autograd.hpp"
#include "sian/core/ops.hpp"
#include "sian/net/extractor.hpp"
#include "sian/net/layers.hpp"

namespace sian {
namespace losses {

// Term weights of the generator objective. The adversarial term is
// unweighted; lambda1 scales feature matching, lambda2 the perceptual term,
// lambda3 the KL divergence and lambda4 the pluggable regularizer.
struct LossWeights {
  double lambda1 = 10.0;
  double lambda2 = 10.0;
  double lambda3 = 0.05;
  double lambda4 = 0.0;
};

inline void validate(const LossWeights& w) {
  for (double v : {w.lambda1, w.lambda2, w.lambda3, w.lambda4})
    check(std::isfinite(v) && v >= 0.0,
          "loss weights must be finite and non-negative");
}

// Per-step scalar record written to the training log.
struct LossReport {
  double gan = 0;
  double feature_match = 0;
  double perceptual = 0;
  double kld = 0;
  double reg = 0;
  double total = 0;
  double disc = 0;  // discriminator objective, filled by the training step
};

// Pluggable regularizer selector; `kWeightL2` is the sum of squared
// generator parameters.
enum class RegKind { kNone, kWeightL2 };

inline RegKind reg_kind_from_string(const std::string& s) {
  if (s == "none") return RegKind::kNone;
  if (s == "weight_l2") return RegKind::kWeightL2;
  fail("unknown regularizer kind: " + s);
}

// Hinge objective for the discriminator: per scale,
// mean(max(0, 1 - real)) + mean(max(0, 1 + fake)), then averaged over
// scales.
template <typename T>
Var<T> hinge_d_loss(const std::vector<Var<T>>& real_logits,
                    const std::vector<Var<T>>& fake_logits) {
  check(!real_logits.empty() && real_logits.size() == fake_logits.size(),
        "hinge_d_loss: scale count mismatch");
  Var<T> total;
  for (size_t s = 0; s < real_logits.size(); ++s) {
    Var<T> real_term = ops::mean_all(
        ops::relu(ops::add_scalar(ops::neg(real_logits[s]), T(1))));
    Var<T> fake_term =
        ops::mean_all(ops::relu(ops::add_scalar(fake_logits[s], T(1))));
    Var<T> scale = ops::add(real_term, fake_term);
    total = s == 0 ? scale : ops::add(total, scale);
  }
  return ops::mul_scalar(total, T(1) / static_cast<T>(real_logits.size()));
}

// Hinge objective for the generator: -mean(fake), averaged over scales.
template <typename T>
Var<T> hinge_g_loss(const std::vector<Var<T>>& fake_logits) {
  check(!fake_logits.empty(), "hinge_g_loss: needs at least one scale");
  Var<T> total;
  for (size_t s = 0; s < fake_logits.size(); ++s) {
    Var<T> scale = ops::neg(ops::mean_all(fake_logits[s]));
    total = s == 0 ? scale : ops::add(total, scale);
  }
  return ops::mul_scalar(total, T(1) / static_cast<T>(fake_logits.size()));
}

// Mean over scales of the sum over layers of mean absolute feature
// differences. Real features are treated as constants: no gradient flows
// into them.
template <typename T>
Var<T> feature_matching_loss(
    const std::vector<std::vector<Var<T>>>& real_feats,
    const std::vector<std::vector<Var<T>>>& fake_feats) {
  check(!real_feats.empty() && real_feats.size() == fake_feats.size(),
        "feature_matching_loss: scale count mismatch");
  Var<T> total;
  for (size_t s = 0; s < real_feats.size(); ++s) {
    check(!real_feats[s].empty() &&
              real_feats[s].size() == fake_feats[s].size(),
          "feature_matching_loss: layer count mismatch");
    Var<T> scale;
    for (size_t l = 0; l < real_feats[s].size(); ++l) {
      Var<T> layer =
          ops::mean_abs_diff(fake_feats[s][l], real_feats[s][l].detach());
      scale = l == 0 ? layer : ops::add(scale, layer);
    }
    total = s == 0 ? scale : ops::add(total, scale);
  }
  return ops::mul_scalar(total, T(1) / static_cast<T>(real_feats.size()));
}

// Weighted sum of mean absolute differences between extractor features of
// the two images.
template <typename T>
Var<T> perceptual_loss(Var<T> real_image, Var<T> fake_image,
                       const net::FeatureExtractor<T>& extractor) {
  std::vector<Var<T>> real_feats = extractor.features(real_image.detach());
  std::vector<Var<T>> fake_feats = extractor.features(fake_image);
  const std::vector<double>& weights = extractor.layer_weights();
  Var<T> total;
  for (size_t l = 0; l < real_feats.size(); ++l) {
    Var<T> layer = ops::mul_scalar(
        ops::mean_abs_diff(fake_feats[l], real_feats[l]),
        static_cast<T>(weights[l]));
    total = l == 0 ? layer : ops::add(total, layer);
  }
  return total;
}

// KL divergence of N(mu, exp(logvar)) from the standard normal, summed over
// style dimensions and averaged over the batch:
// 0.5 * sum_d (mu_d^2 + exp(logvar_d) - logvar_d - 1).
template <typename T>
Var<T> kld_loss(Var<T> mu, Var<T> logvar) {
  check(mu.defined() && logvar.defined() &&
            mu.value().same_shape(logvar.value()),
        "kld_loss: mu and logvar must have equal shapes");
  const int64_t n = mu.value().ndim() == 2 ? mu.value().dim(0) : 1;
  Var<T> per_dim = ops::add(
      ops::square(mu),
      ops::add_scalar(ops::sub(ops::exp_(logvar), logvar), T(-1)));
  return ops::mul_scalar(ops::sum_all(per_dim),
                         T(0.5) / static_cast<T>(n));
}

// Regularizer hook: sum of squared parameter values, or zero.
template <typename T>
Var<T> reg_loss(RegKind kind, const net::NamedVars<T>& params) {
  if (kind == RegKind::kNone)
    return Var<T>::constant(Array<T>::zeros({1}));
  Var<T> total;
  bool first = true;
  for (const auto& [name, var] : params) {
    Var<T> term = ops::sum_all(ops::square(var));
    total = first ? term : ops::add(total, term);
    first = false;
  }
  check(!first, "reg_loss: weight_l2 needs at least one parameter");
  return total;
}

// The generator objective terms before weighting.
template <typename T>
struct LossParts {
  Var<T> gan;
  Var<T> feature_match;
  Var<T> perceptual;
  Var<T> kld;
  Var<T> reg;
};

// Combines the five parts in a fixed association order so that the reported
// total is exactly reproducible from the reported terms:
// total = (((gan + l1*F) + l2*P) + l3*K) + l4*R.
// Throws if any part is non-finite, naming the offending term.
template <typename T>
std::pair<Var<T>, LossReport> total_generator_loss(const LossParts<T>& parts,
                                                   const LossWeights& w) {
  validate(w);
  auto scalar = [](const Var<T>& v, const char* name) {
    check(v.defined() && v.value().size() == 1,
          std::string("total_generator_loss: term '") + name +
              "' must be a scalar");
    check_runtime(std::isfinite(static_cast<double>(v.value()[0])),
                  std::string("loss term '") + name + "' is non-finite");
    return static_cast<double>(v.value()[0]);
  };
  LossReport report;
  report.gan = scalar(parts.gan, "gan");
  report.feature_match = scalar(parts.feature_match, "feature_match");
  report.perceptual = scalar(parts.perceptual, "perceptual");
  report.kld = scalar(parts.kld, "kld");
  report.reg = scalar(parts.reg, "reg");
  check_runtime(report.feature_match >= 0 && report.perceptual >= 0 &&
                    report.kld >= -1e-9 && report.reg >= 0,
                "total_generator_loss: a non-negative term went negative");

  Var<T> total = parts.gan;
  total = ops::add(total,
                   ops::mul_scalar(parts.feature_match,
                                   static_cast<T>(w.lambda1)));
  total =
      ops::add(total, ops::mul_scalar(parts.perceptual,
                                      static_cast<T>(w.lambda2)));
  total = ops::add(total,
                   ops::mul_scalar(parts.kld, static_cast<T>(w.lambda3)));
  total = ops::add(total,
                   ops::mul_scalar(parts.reg, static_cast<T>(w.lambda4)));
  report.total = static_cast<double>(total.value()[0]);
  return {total, report};
}

}  // namespace losses
}  // namespace sian

#endif  // SIAN_LOSSES_LOSSES_HPP_
