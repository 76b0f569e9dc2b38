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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/finite_diff.hpp"
#include "sian/net/checkpoint.hpp"
#include "sian/net/discriminator.hpp"
#include "sian/net/encoder.hpp"
#include "sian/net/extractor.hpp"
#include "sian/net/generator.hpp"

using sian::Array;
using sian::Rng;
using sian::Var;
namespace net = sian::net;
namespace ops = sian::ops;
namespace fs = std::filesystem;

namespace {

template <typename T>
Array<T> random_array(Rng& rng, const sian::Shape& shape, double scale = 1.0) {
  Array<T> out(shape);
  for (int64_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<T>(rng.normal() * scale);
  return out;
}

// Conditioning level with a plausible structure: half-plane one-hot mask,
// unit-norm directions inside the mask, distances in [0, 1].
template <typename T>
net::CondLevel<T> random_cond(Rng& rng, int64_t n, int64_t h, int64_t w) {
  net::CondLevel<T> cond;
  cond.m = Array<T>::zeros({n, 2, h, w});
  cond.p = Array<T>::zeros({n, 2, h, w});
  cond.q = Array<T>::zeros({n, 1, h, w});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        const bool fg = rng.bernoulli(0.5);
        cond.m.at(i, fg ? 1 : 0, y, x) = T(1);
        if (fg) {
          const double angle = rng.uniform(0.0, 6.283185307179586);
          cond.p.at(i, 0, y, x) = static_cast<T>(std::cos(angle));
          cond.p.at(i, 1, y, x) = static_cast<T>(std::sin(angle));
          cond.q.at(i, 0, y, x) = static_cast<T>(rng.uniform());
        }
      }
  return cond;
}

template <typename T>
Var<T> find_param(const net::NamedVars<T>& params, const std::string& name) {
  for (const auto& [key, var] : params)
    if (key == name) return var;
  FAIL("parameter not found: ", name);
  return Var<T>();
}

template <typename T>
void fill_matching(net::NamedVars<T>* params, const std::string& needle,
                   T value) {
  for (auto& [key, var] : *params)
    if (key.find(needle) != std::string::npos) var.node()->value.fill(value);
}

// Scalar probe: mean of the elementwise product with a fixed random tensor,
// so every output element influences the gradient.
template <typename T>
Var<T> probe(Var<T> out, const Array<T>& weights) {
  return ops::mean_all(ops::mul(out, Var<T>::constant(weights)));
}

net::NetConfig micro_config() {
  net::NetConfig cfg;
  cfg.style_dim = 16;
  cfg.sian_embed = 16;
  cfg.gen_channels = {32, 32, 16};
  cfg.image_size = 16;
  cfg.ndf = 8;
  cfg.nef = 8;
  // At 16 pixels the half-resolution scale only has 8x8 inputs, which a
  // four-layer stack of 4x4 convs would shrink to nothing.
  cfg.disc_layers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("sian block: zero modulation and pure standardization") {
  Rng rng(11);
  net::SianBlock<double> block(rng, /*channels=*/4, /*style_dim=*/5,
                               /*embed=*/6, true, true, 1e-5);
  net::NamedVars<double> params;
  block.collect("blk", &params);
  Rng data_rng(12);
  Var<double> h = Var<double>::constant(
      random_array<double>(data_rng, {2, 4, 8, 8}, 2.0));
  auto cond = random_cond<double>(data_rng, 2, 8, 8);
  Var<double> style =
      Var<double>::constant(random_array<double>(data_rng, {2, 5}));

  // Zeroed gamma/beta producers make the block output exactly zero.
  fill_matching(&params, "gamma_conv", 0.0);
  fill_matching(&params, "beta_conv", 0.0);
  Var<double> out = block.forward(h, cond, style);
  for (int64_t i = 0; i < out.value().size(); ++i)
    CHECK(out.value()[i] == 0.0);

  // A fused gamma of one and beta of zero leaves the standardized
  // activation: per-channel mean ~0 and std ~1 over N,H,W.
  find_param(params, "blk.branch_p.gamma_conv.bias").node()->value.fill(1.0);
  out = block.forward(h, cond, style);
  for (int64_t c = 0; c < 4; ++c) {
    double sum = 0, sum_sq = 0;
    int64_t count = 0;
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t y = 0; y < 8; ++y)
        for (int64_t x = 0; x < 8; ++x) {
          const double v = out.value().at(n, c, y, x);
          sum += v;
          sum_sq += v * v;
          ++count;
        }
    const double mean = sum / count;
    const double std_dev = std::sqrt(sum_sq / count - mean * mean);
    CHECK(std::abs(mean) < 1e-4);
    CHECK(std::abs(std_dev - 1.0) < 1e-3);
  }
}

TEST_CASE("sian block: branch sum equals fused modulation bitwise") {
  Rng rng(21);
  net::SianBlock<double> block(rng, 3, 4, 5, true, true, 1e-5);
  Rng data_rng(22);
  auto cond = random_cond<double>(data_rng, 2, 6, 6);
  Var<double> style =
      Var<double>::constant(random_array<double>(data_rng, {2, 4}));
  auto [gp, bp] = block.branch_modulation(0, cond, style);
  auto [gq, bq] = block.branch_modulation(1, cond, style);
  auto [gamma, beta] = block.modulation(cond, style);
  for (int64_t i = 0; i < gamma.value().size(); ++i) {
    CHECK(gamma.value()[i] == gp.value()[i] + gq.value()[i]);
    CHECK(beta.value()[i] == bp.value()[i] + bq.value()[i]);
  }
}

TEST_CASE("sian block: input validation") {
  Rng rng(31);
  net::SianBlock<double> block(rng, 3, 4, 5, true, true, 1e-5);
  Rng data_rng(32);
  Var<double> h =
      Var<double>::constant(random_array<double>(data_rng, {1, 3, 6, 6}));
  auto cond = random_cond<double>(data_rng, 1, 6, 6);
  Var<double> style =
      Var<double>::constant(random_array<double>(data_rng, {1, 4}));
  auto bad_cond = random_cond<double>(data_rng, 1, 4, 4);
  CHECK_THROWS_AS(block.forward(h, bad_cond, style), std::invalid_argument);

  Array<double> nan_h = h.value().clone();
  nan_h[0] = std::nan("");
  CHECK_THROWS_AS(
      block.forward(Var<double>::constant(nan_h), cond, style),
      std::invalid_argument);
  CHECK_NOTHROW(block.forward(h, cond, style));
}

TEST_CASE("sian block: ablation switches cut the style and instance paths") {
  Rng data_rng(42);
  Var<double> h = Var<double>::constant(
      random_array<double>(data_rng, {2, 4, 8, 8}, 1.5));
  auto cond_a = random_cond<double>(data_rng, 2, 8, 8);
  auto cond_b = cond_a;
  cond_b.p = random_cond<double>(data_rng, 2, 8, 8).p;
  cond_b.q = random_cond<double>(data_rng, 2, 8, 8).q;
  Var<double> style_a =
      Var<double>::constant(random_array<double>(data_rng, {2, 5}));
  Var<double> style_b =
      Var<double>::constant(random_array<double>(data_rng, {2, 5}));

  // Both switches off: the output depends only on the semantic map, so
  // changing P, Q and S leaves it exactly unchanged.
  {
    Rng rng(41);
    net::SianBlock<double> block(rng, 4, 5, 6, /*inst_on=*/false,
                                 /*style_on=*/false, 1e-5);
    Array<double> out_a = block.forward(h, cond_a, style_a).value();
    Array<double> out_b = block.forward(h, cond_b, style_b).value();
    for (int64_t i = 0; i < out_a.size(); ++i)
      CHECK(out_a[i] == out_b[i]);
  }
  // Style off only: invariant to S but sensitive to the instance layouts.
  {
    Rng rng(41);
    net::SianBlock<double> block(rng, 4, 5, 6, /*inst_on=*/true,
                                 /*style_on=*/false, 1e-5);
    Array<double> out_a = block.forward(h, cond_a, style_a).value();
    Array<double> out_a2 = block.forward(h, cond_a, style_b).value();
    Array<double> out_b = block.forward(h, cond_b, style_a).value();
    double diff = 0;
    for (int64_t i = 0; i < out_a.size(); ++i) {
      CHECK(out_a[i] == out_a2[i]);
      diff = std::max(diff, std::abs(out_a[i] - out_b[i]));
    }
    CHECK(diff > 0.0);
  }
  // Instance off only: invariant to P and Q but sensitive to S.
  {
    Rng rng(41);
    net::SianBlock<double> block(rng, 4, 5, 6, /*inst_on=*/false,
                                 /*style_on=*/true, 1e-5);
    Array<double> out_a = block.forward(h, cond_a, style_a).value();
    Array<double> out_b = block.forward(h, cond_b, style_a).value();
    Array<double> out_s = block.forward(h, cond_a, style_b).value();
    double diff = 0;
    for (int64_t i = 0; i < out_a.size(); ++i) {
      CHECK(out_a[i] == out_b[i]);
      diff = std::max(diff, std::abs(out_a[i] - out_s[i]));
    }
    CHECK(diff > 0.0);
  }
}

TEST_CASE("sian block: finite differences validate every weight group") {
  Rng rng(51);
  net::SianBlock<double> block(rng, 4, 5, 6, true, true, 1e-5);
  net::NamedVars<double> params;
  block.collect("blk", &params);
  Rng data_rng(52);
  Var<double> h = Var<double>::constant(
      random_array<double>(data_rng, {2, 4, 8, 8}, 1.2));
  auto cond = random_cond<double>(data_rng, 2, 8, 8);
  Var<double> style =
      Var<double>::constant(random_array<double>(data_rng, {2, 5}));
  Array<double> weights = random_array<double>(data_rng, {2, 4, 8, 8});

  auto loss = [&]() { return probe(block.forward(h, cond, style), weights); };
  for (const auto& [name, param] : params) {
    const double err = sian::testing::gradient_rel_error(loss, param, 1e-3);
    INFO("weight group: ", name);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("resblock: zeroed parameters and shape contract") {
  Rng rng(61);
  net::SianResBlock<double> block(rng, /*in=*/128, /*out=*/64, 5, 6, true,
                                  true, true, 1e-5);
  Rng data_rng(62);
  Var<double> h = Var<double>::constant(
      random_array<double>(data_rng, {1, 128, 8, 8}));
  auto cond = random_cond<double>(data_rng, 1, 8, 8);
  Var<double> style =
      Var<double>::constant(random_array<double>(data_rng, {1, 5}));
  Var<double> out = block.forward(h, cond, style);
  CHECK(out.shape() == sian::Shape{1, 64, 8, 8});

  net::NamedVars<double> params;
  block.collect("blk", &params);
  for (auto& [name, var] : params) var.node()->value.fill(0.0);
  out = block.forward(h, cond, style);
  for (int64_t i = 0; i < out.value().size(); ++i)
    CHECK(out.value()[i] == 0.0);
}

TEST_CASE("resblock: removing the skip normalization changes the output") {
  Rng data_rng(72);
  Var<double> h =
      Var<double>::constant(random_array<double>(data_rng, {2, 6, 8, 8}));
  auto cond = random_cond<double>(data_rng, 2, 8, 8);
  Var<double> style =
      Var<double>::constant(random_array<double>(data_rng, {2, 5}));
  Rng rng_a(71), rng_b(71);
  net::SianResBlock<double> with_skip(rng_a, 6, 6, 5, 4, true, true,
                                      /*skip_sian=*/true, 1e-5);
  net::SianResBlock<double> without_skip(rng_b, 6, 6, 5, 4, true, true,
                                         /*skip_sian=*/false, 1e-5);
  Array<double> a = with_skip.forward(h, cond, style).value();
  Array<double> b = without_skip.forward(h, cond, style).value();
  double diff = 0;
  for (int64_t i = 0; i < a.size(); ++i)
    diff = std::max(diff, std::abs(a[i] - b[i]));
  CHECK(diff > 0.0);
}

namespace {

// Pyramid of structured conditioning levels for a generator config.
template <typename T>
std::vector<net::CondLevel<T>> random_pyramid(Rng& rng,
                                              const net::NetConfig& cfg,
                                              int64_t n) {
  std::vector<net::CondLevel<T>> pyramid;
  for (int64_t i = 0; i < cfg.num_blocks(); ++i) {
    const int64_t r = cfg.block_resolution(i);
    pyramid.push_back(random_cond<T>(rng, n, r, r));
  }
  return pyramid;
}

// All-background pyramid: one-hot background, zero direction and distance.
template <typename T>
std::vector<net::CondLevel<T>> empty_pyramid(const net::NetConfig& cfg,
                                             int64_t n) {
  std::vector<net::CondLevel<T>> pyramid;
  for (int64_t i = 0; i < cfg.num_blocks(); ++i) {
    const int64_t r = cfg.block_resolution(i);
    net::CondLevel<T> cond;
    cond.m = Array<T>::zeros({n, 2, r, r});
    cond.p = Array<T>::zeros({n, 2, r, r});
    cond.q = Array<T>::zeros({n, 1, r, r});
    for (int64_t b = 0; b < n; ++b)
      for (int64_t y = 0; y < r; ++y)
        for (int64_t x = 0; x < r; ++x) cond.m.at(b, 0, y, x) = T(1);
    pyramid.push_back(std::move(cond));
  }
  return pyramid;
}

}  // namespace

TEST_CASE("generator: output contract and conditioning liveness") {
  net::NetConfig cfg = micro_config();
  Rng rng(81);
  net::Generator<float> gen(rng, cfg);
  Rng data_rng(82);
  auto pyramid = random_pyramid<float>(data_rng, cfg, 2);
  Var<float> style_a =
      Var<float>::constant(random_array<float>(data_rng, {2, 16}));
  Var<float> style_b =
      Var<float>::constant(random_array<float>(data_rng, {2, 16}));

  Var<float> img = gen.forward(style_a, pyramid);
  CHECK(img.shape() == sian::Shape{2, 3, 16, 16});
  for (int64_t i = 0; i < img.value().size(); ++i) {
    CHECK(img.value()[i] >= -1.0f);
    CHECK(img.value()[i] <= 1.0f);
  }

  // Same inputs twice: bitwise identical output.
  Array<float> again = gen.forward(style_a, pyramid).value();
  for (int64_t i = 0; i < again.size(); ++i)
    CHECK(again[i] == img.value()[i]);

  // Different style, same layout: the image must change.
  Array<float> other_style = gen.forward(style_b, pyramid).value();
  double style_diff = 0;
  for (int64_t i = 0; i < other_style.size(); ++i)
    style_diff += std::abs(other_style[i] - img.value()[i]);
  style_diff /= static_cast<double>(other_style.size());
  CHECK(style_diff > 0.0);

  // Same style, empty vs. dense layout: the image must change.
  auto empty = empty_pyramid<float>(cfg, 2);
  Array<float> other_mask = gen.forward(style_a, empty).value();
  double mask_diff = 0;
  for (int64_t i = 0; i < other_mask.size(); ++i)
    mask_diff += std::abs(other_mask[i] - img.value()[i]);
  mask_diff /= static_cast<double>(other_mask.size());
  CHECK(mask_diff > 0.0);

  // A malformed pyramid is a configuration error.
  auto bad = pyramid;
  bad.pop_back();
  CHECK_THROWS_AS(gen.forward(style_a, bad), std::invalid_argument);
  auto wrong_res = pyramid;
  std::swap(wrong_res[0], wrong_res[1]);
  CHECK_THROWS_AS(gen.forward(style_a, wrong_res), std::invalid_argument);
}

TEST_CASE("generator: full-scale seven-block configuration reaches 256") {
  net::NetConfig cfg;
  cfg.style_dim = 256;
  cfg.sian_embed = 128;
  cfg.gen_channels = {1024, 1024, 1024, 512, 256, 128, 64};
  cfg.image_size = 256;
  Rng rng(91);
  net::Generator<float> gen(rng, cfg);
  // Freeze all parameters: this is a pure shape check and freezing keeps the
  // forward pass from retaining the autograd graph.
  net::NamedVars<float> params;
  gen.collect(&params);
  for (auto& [name, var] : params) var.set_requires_grad(false);

  Rng data_rng(92);
  auto pyramid = random_pyramid<float>(data_rng, cfg, 1);
  Var<float> style =
      Var<float>::constant(random_array<float>(data_rng, {1, 256}));
  Var<float> img = gen.forward(style, pyramid);
  CHECK(img.shape() == sian::Shape{1, 3, 256, 256});
  CHECK(img.value().all_finite());
}

TEST_CASE("encoder: style heads and input validation") {
  net::NetConfig cfg = micro_config();
  Rng rng(101);
  net::Encoder<float> enc(rng, cfg);
  Rng data_rng(102);
  Array<float> image_a = random_array<float>(data_rng, {2, 3, 16, 16}, 0.5);
  Array<float> image_b = image_a.clone();
  // Shift one image toward a different mean color.
  for (int64_t i = 0; i < image_b.size() / 3; ++i) image_b[i] += 0.8f;

  auto [mu_a, logvar_a] = enc.forward(Var<float>::constant(image_a));
  CHECK(mu_a.shape() == sian::Shape{2, 16});
  CHECK(logvar_a.shape() == sian::Shape{2, 16});
  CHECK(mu_a.value().all_finite());
  CHECK(logvar_a.value().all_finite());

  auto [mu_a2, logvar_a2] = enc.forward(Var<float>::constant(image_a));
  for (int64_t i = 0; i < mu_a.value().size(); ++i) {
    CHECK(mu_a.value()[i] == mu_a2.value()[i]);
    CHECK(logvar_a.value()[i] == logvar_a2.value()[i]);
  }

  auto [mu_b, logvar_b] = enc.forward(Var<float>::constant(image_b));
  double diff = 0;
  for (int64_t i = 0; i < mu_b.value().size(); ++i)
    diff = std::max<double>(diff, std::abs(mu_b.value()[i] - mu_a.value()[i]));
  CHECK(diff > 0.0);

  CHECK_THROWS_AS(
      enc.forward(Var<float>::constant(Array<float>::zeros({2, 1, 16, 16}))),
      std::invalid_argument);
  CHECK_THROWS_AS(
      enc.forward(Var<float>::constant(Array<float>::zeros({2, 3, 8, 8}))),
      std::invalid_argument);
}

TEST_CASE("reparameterize: sampling identities") {
  Rng data_rng(112);
  Array<double> mu_arr = random_array<double>(data_rng, {2, 6});
  Var<double> mu = Var<double>::constant(mu_arr);

  // Vanishing variance collapses the sample onto mu.
  Var<double> tiny = Var<double>::constant(Array<double>::full({2, 6}, -40.0));
  Rng rng(111);
  Var<double> sample = net::reparameterize(mu, tiny, rng);
  for (int64_t i = 0; i < sample.value().size(); ++i)
    CHECK(std::abs(sample.value()[i] - mu_arr[i]) < 1e-8);

  // Unit-variance sampling matches its first two moments.
  Var<double> zero_mu = Var<double>::constant(Array<double>::zeros({1, 4}));
  Var<double> zero_lv = Var<double>::constant(Array<double>::zeros({1, 4}));
  Rng mc(113);
  double sum[4] = {0, 0, 0, 0}, sum_sq[4] = {0, 0, 0, 0};
  const int64_t draws = 10000;
  for (int64_t t = 0; t < draws; ++t) {
    Array<double> s = net::reparameterize(zero_mu, zero_lv, mc).value();
    for (int64_t d = 0; d < 4; ++d) {
      sum[d] += s[d];
      sum_sq[d] += s[d] * s[d];
    }
  }
  for (int64_t d = 0; d < 4; ++d) {
    const double mean = sum[d] / draws;
    const double var = sum_sq[d] / draws - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(var > 0.9);
    CHECK(var < 1.1);
  }

  // Fixed seed reproduces the sample, and the recorded eps explains it.
  Rng r1(117), r2(117);
  Array<double> eps;
  Var<double> unit_lv = Var<double>::constant(Array<double>::zeros({2, 6}));
  Var<double> s1 = net::reparameterize(mu, unit_lv, r1, &eps);
  Var<double> s2 = net::reparameterize(mu, unit_lv, r2);
  for (int64_t i = 0; i < s1.value().size(); ++i) {
    CHECK(s1.value()[i] == s2.value()[i]);
    CHECK(s1.value()[i] == doctest::Approx(mu_arr[i] + eps[i]).epsilon(1e-12));
  }
}

TEST_CASE("discriminator: patch logits, features, determinism") {
  net::NetConfig cfg;
  cfg.style_dim = 256;
  cfg.sian_embed = 128;
  cfg.gen_channels = {1024, 1024, 1024, 512, 256, 128, 64};
  cfg.image_size = 256;
  cfg.ndf = 8;
  Rng rng(121);
  net::Discriminator<float> disc(rng, cfg);
  Rng data_rng(122);
  Array<float> image = random_array<float>(data_rng, {1, 3, 256, 256}, 0.3);
  auto cond = random_cond<float>(data_rng, 1, 256, 256);

  auto out = disc.forward(Var<float>::constant(image), cond);
  REQUIRE(out.size() == 2);
  // Four stride-[2,2,2,1] 4x4 convs plus the stride-1 head: 256 -> 30.
  CHECK(out[0].logits.shape() == sian::Shape{1, 1, 30, 30});
  CHECK(out[1].logits.shape() == sian::Shape{1, 1, 14, 14});
  CHECK(out[0].features.size() == 4);
  CHECK(out[1].features.size() == 4);

  auto again = disc.forward(Var<float>::constant(image), cond);
  for (int64_t i = 0; i < out[0].logits.value().size(); ++i)
    CHECK(out[0].logits.value()[i] == again[0].logits.value()[i]);

  auto bad = random_cond<float>(data_rng, 1, 128, 128);
  CHECK_THROWS_AS(disc.forward(Var<float>::constant(image), bad),
                  std::invalid_argument);
}

TEST_CASE("discriminator: semantic-only conditioning variant") {
  net::NetConfig cfg = micro_config();
  cfg.disc_sees_pq = false;
  Rng rng(131);
  net::Discriminator<float> disc(rng, cfg);
  Rng data_rng(132);
  Array<float> image = random_array<float>(data_rng, {2, 3, 16, 16});
  auto cond = random_cond<float>(data_rng, 2, 16, 16);
  auto out = disc.forward(Var<float>::constant(image), cond);
  CHECK(out.size() == 2);
  // With the direction/distance inputs detached, changing them cannot
  // affect the logits.
  auto cond2 = cond;
  cond2.p = random_cond<float>(data_rng, 2, 16, 16).p;
  auto out2 = disc.forward(Var<float>::constant(image), cond2);
  for (int64_t i = 0; i < out[0].logits.value().size(); ++i)
    CHECK(out[0].logits.value()[i] == out2[0].logits.value()[i]);
}

TEST_CASE("extractor: frozen, seeded, and gradient-transparent") {
  net::FeatureExtractor<double> ext(7, {8, 16}, /*include_input=*/true);
  CHECK(ext.num_layers() == 3);
  CHECK(ext.layer_weights().size() == 3);
  CHECK(ext.identity() == "randconv-seed7-ch8x16-in1");

  Rng data_rng(142);
  Array<double> image = random_array<double>(data_rng, {2, 3, 16, 16}, 0.5);
  auto feats = ext.features(Var<double>::constant(image));
  REQUIRE(feats.size() == 3);
  // Layer 0 is the raw image.
  for (int64_t i = 0; i < image.size(); ++i)
    CHECK(feats[0].value()[i] == image[i]);
  CHECK(feats[1].shape() == sian::Shape{2, 8, 8, 8});
  CHECK(feats[2].shape() == sian::Shape{2, 16, 4, 4});

  net::FeatureExtractor<double> same(7, {8, 16}, true);
  auto feats2 = same.features(Var<double>::constant(image));
  for (int64_t i = 0; i < feats[2].value().size(); ++i)
    CHECK(feats[2].value()[i] == feats2[2].value()[i]);

  // Gradients flow through the frozen convs into the image.
  Var<double> leaf = Var<double>::leaf(image.clone(), true);
  Var<double> loss = ops::mean_all(ext.features(leaf)[2]);
  loss.backward();
  CHECK(leaf.has_grad());

  Array<double> emb = ext.embed(image);
  CHECK(emb.same_shape(Array<double>::zeros({2, 16})));
  CHECK(emb.all_finite());
}

TEST_CASE("checkpoint: container round trip and parameter restore") {
  const fs::path path = fs::temp_directory_path() /
                        ("sian_ckpt_" + std::to_string(::getpid()) + ".bin");
  net::CheckpointData data;
  data.config_json = "{\"style_dim\":16}";
  data.step = 1234;
  data.counters["opt.gen.step"] = 77;
  data.rng_states["train"] = {1, 2, 3, 4};
  Rng rng(151);
  data.tensors["w"] = random_array<float>(rng, {3, 2});
  data.tensors["b"] = random_array<float>(rng, {5});

  net::save_checkpoint(path.string(), data);
  net::CheckpointData loaded = net::load_checkpoint(path.string());
  CHECK(loaded.config_json == data.config_json);
  CHECK(loaded.step == 1234);
  CHECK(loaded.counters.at("opt.gen.step") == 77);
  CHECK(loaded.rng_states.at("train") == std::array<uint64_t, 4>{1, 2, 3, 4});
  for (int64_t i = 0; i < data.tensors["w"].size(); ++i)
    CHECK(loaded.tensors.at("w")[i] == data.tensors.at("w")[i]);

  // Re-saving the loaded state writes byte-identical content.
  const fs::path path2 = path.string() + ".again";
  net::save_checkpoint(path2.string(), loaded);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)),
                 std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)),
                 std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  // Corrupt magic is rejected.
  {
    std::ofstream bad(path, std::ios::binary | std::ios::trunc);
    bad << "NOTSIANX rest";
  }
  CHECK_THROWS(net::load_checkpoint(path.string()));
  fs::remove(path);
  fs::remove(path2);

  // Parameter snapshot and restore through the named registry.
  net::NetConfig cfg = micro_config();
  Rng grng(152);
  net::Generator<float> gen(grng, cfg);
  net::NamedVars<float> params;
  gen.collect(&params);
  std::map<std::string, Array<float>> stored;
  net::store_params(params, &stored);
  Array<float> original = params[3].second.value().clone();
  for (auto& [name, var] : params) var.node()->value.fill(0.5f);
  net::load_params(stored, &params);
  for (int64_t i = 0; i < original.size(); ++i)
    CHECK(params[3].second.value()[i] == original[i]);

  stored.erase(params[0].first);
  CHECK_THROWS(net::load_params(stored, &params));
}
