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

#include "sian/pipeline/trainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "sian/net/checkpoint.hpp"

namespace sian {
namespace pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Independent stream ids hung off the run seed.
constexpr uint64_t kInitStream = 0x1217u;
constexpr uint64_t kEpsStream = 0xE95u;
constexpr uint64_t kShuffleStream = 0x0EDE2u;
constexpr uint64_t kAugmentStream = 0xA06u;

Rng init_rng(const TrainConfig& cfg) { return Rng(seed_mix(cfg.seed, kInitStream)); }

std::vector<Var<float>> vars_of(const net::NamedVars<float>& named) {
  std::vector<Var<float>> vars;
  vars.reserve(named.size());
  for (const auto& [name, var] : named) vars.push_back(var);
  return vars;
}

void set_requires_grad(const net::NamedVars<float>& named, bool value) {
  for (const auto& [name, var] : named) {
    Var<float> v = var;
    v.set_requires_grad(value);
  }
}

std::vector<Var<float>> logits_of(const std::vector<net::ScaleOutput<float>>& outs) {
  std::vector<Var<float>> logits;
  for (const auto& so : outs) logits.push_back(so.logits);
  return logits;
}

std::vector<std::vector<Var<float>>> features_of(
    const std::vector<net::ScaleOutput<float>>& outs) {
  std::vector<std::vector<Var<float>>> feats;
  for (const auto& so : outs) feats.push_back(so.features);
  return feats;
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_([&cfg] {
        cfg.validate();
        return cfg;
      }()),
      gen_([this] {
        Rng rng = init_rng(cfg_);
        return net::Generator<float>(rng, cfg_.net);
      }()),
      enc_([this] {
        // Each network draws from its own fork so adding layers to one does
        // not shift another's initialization.
        Rng rng = init_rng(cfg_).fork(1);
        return net::Encoder<float>(rng, cfg_.net);
      }()),
      disc_([this] {
        Rng rng = init_rng(cfg_).fork(2);
        return net::Discriminator<float>(rng, cfg_.net);
      }()),
      extractor_(cfg_.extractor.seed, cfg_.extractor.channels,
                 cfg_.extractor.include_input, cfg_.extractor.layer_weights),
      reg_kind_(losses::reg_kind_from_string(cfg_.reg_kind)),
      gen_named_([this] {
        net::NamedVars<float> named;
        gen_.collect(&named);
        return named;
      }()),
      g_named_([this] {
        net::NamedVars<float> named = gen_named_;
        enc_.collect(&named);
        return named;
      }()),
      d_named_([this] {
        net::NamedVars<float> named;
        disc_.collect(&named);
        return named;
      }()),
      all_named_([this] {
        net::NamedVars<float> named = g_named_;
        named.insert(named.end(), d_named_.begin(), d_named_.end());
        return named;
      }()),
      opt_g_(vars_of(g_named_),
             {static_cast<float>(cfg_.lr_g), static_cast<float>(cfg_.beta1),
              static_cast<float>(cfg_.beta2), static_cast<float>(cfg_.adam_eps)}),
      opt_d_(vars_of(d_named_),
             {static_cast<float>(cfg_.lr_d), static_cast<float>(cfg_.beta1),
              static_cast<float>(cfg_.beta2), static_cast<float>(cfg_.adam_eps)}),
      eps_rng_(seed_mix(cfg_.seed, kEpsStream)) {}

Trainer Trainer::from_checkpoint(const std::string& path) {
  const net::CheckpointData data = net::load_checkpoint(path);
  json j = json::parse(data.config_json, nullptr, /*allow_exceptions=*/false);
  check_runtime(!j.is_discarded(), "checkpoint: corrupt config snapshot");
  Trainer trainer(config_from_json(j));

  net::load_params(data.tensors, &trainer.all_named_);
  auto load_moments = [&data](const net::NamedVars<float>& named, Adam<float>* opt,
                              const std::string& prefix) {
    for (size_t i = 0; i < named.size(); ++i) {
      for (const char* which : {".m1", ".m2"}) {
        const std::string key = prefix + named[i].first + which;
        auto it = data.tensors.find(key);
        check_runtime(it != data.tensors.end(), "checkpoint: missing tensor " + key);
        Array<float>& dst = which[2] == '1' ? opt->moment1(i) : opt->moment2(i);
        check_runtime(it->second.same_shape(dst), "checkpoint: shape mismatch for " + key);
        std::copy(it->second.data(), it->second.data() + dst.size(), dst.data());
      }
    }
  };
  load_moments(trainer.g_named_, &trainer.opt_g_, "opt.g.");
  load_moments(trainer.d_named_, &trainer.opt_d_, "opt.d.");

  trainer.opt_g_.set_step_count(static_cast<int64_t>(data.counters.at("opt.g.t")));
  trainer.opt_d_.set_step_count(static_cast<int64_t>(data.counters.at("opt.d.t")));
  trainer.epoch_ = static_cast<int64_t>(data.counters.at("epoch"));
  trainer.step_ = data.step;
  trainer.eps_rng_.set_state(data.rng_states.at("eps"));
  return trainer;
}

void Trainer::save(const std::string& path) {
  net::CheckpointData data;
  data.config_json = config_to_json(cfg_).dump();
  data.step = step_;
  data.counters["epoch"] = static_cast<uint64_t>(epoch_);
  data.counters["opt.g.t"] = static_cast<uint64_t>(opt_g_.step_count());
  data.counters["opt.d.t"] = static_cast<uint64_t>(opt_d_.step_count());
  data.rng_states["eps"] = eps_rng_.state();
  net::store_params(all_named_, &data.tensors);
  auto store_moments = [&data](const net::NamedVars<float>& named, Adam<float>* opt,
                               const std::string& prefix) {
    for (size_t i = 0; i < named.size(); ++i) {
      data.tensors.emplace(prefix + named[i].first + ".m1", opt->moment1(i).clone());
      data.tensors.emplace(prefix + named[i].first + ".m2", opt->moment2(i).clone());
    }
  };
  store_moments(g_named_, &opt_g_, "opt.g.");
  store_moments(d_named_, &opt_d_, "opt.d.");
  net::save_checkpoint(path, data);
}

void Trainer::check_params_finite() const {
  for (const auto& [name, var] : all_named_)
    check_runtime(var.value().all_finite(),
                  "parameter '" + name + "' went non-finite at step " +
                      std::to_string(step_));
}

losses::LossReport Trainer::train_step(const std::vector<DatasetItem>& batch) {
  check(!batch.empty(), "train_step: empty batch");
  const BatchTensors bt = make_batch(batch, cfg_.net);
  Var<float> real = Var<float>::constant(bt.images);

  // One generator pass feeds both updates.
  auto [mu, logvar] = enc_.forward(real);
  Var<float> style = net::reparameterize(mu, logvar, eps_rng_);
  Var<float> fake = gen_.forward(style, bt.cond.pyramid);

  // Discriminator update on the detached fake.
  opt_d_.zero_grad();
  const auto d_real = disc_.forward(real, bt.cond.native);
  const auto d_fake = disc_.forward(fake.detach(), bt.cond.native);
  Var<float> d_loss = losses::hinge_d_loss(logits_of(d_real), logits_of(d_fake));
  check_runtime(std::isfinite(static_cast<double>(d_loss.value()[0])),
                "loss term 'disc' is non-finite");
  d_loss.backward();
  opt_d_.step();

  // Generator + encoder update against the freshly updated discriminator;
  // its weights are frozen so the backward pass skips their gradients.
  set_requires_grad(d_named_, false);
  opt_g_.zero_grad();
  const auto d_real_g = disc_.forward(real, bt.cond.native);
  const auto d_fake_g = disc_.forward(fake, bt.cond.native);

  losses::LossParts<float> parts;
  parts.gan = losses::hinge_g_loss(logits_of(d_fake_g));
  parts.feature_match =
      losses::feature_matching_loss(features_of(d_real_g), features_of(d_fake_g));
  parts.perceptual = losses::perceptual_loss(real, fake, extractor_);
  parts.kld = losses::kld_loss(mu, logvar);
  parts.reg = losses::reg_loss(reg_kind_, gen_named_);
  auto [total, report] = losses::total_generator_loss(parts, cfg_.loss);
  report.disc = static_cast<double>(d_loss.value()[0]);
  total.backward();
  opt_g_.step();
  set_requires_grad(d_named_, true);

  ++step_;
  check_params_finite();
  return report;
}

void Trainer::fit(const std::vector<DatasetItem>& items, const std::string& out_dir) {
  check(!items.empty(), "fit: empty dataset");
  fs::create_directories(out_dir);

  SplitResult split = split_by_source(items, cfg_.holdout_fraction, cfg_.seed);
  check(!split.train.empty(), "fit: holdout split left no training items");
  const int64_t n = static_cast<int64_t>(split.train.size());
  const int64_t batch = std::min<int64_t>(cfg_.batch_size, n);
  const int64_t steps_per_epoch = std::max<int64_t>(1, n / cfg_.batch_size);

  const bool fresh_run = step_ == 0;
  std::ofstream log((fs::path(out_dir) / "train_log.jsonl").string(),
                    fresh_run ? std::ios::trunc : std::ios::app);
  check_runtime(static_cast<bool>(log), "fit: cannot write to '" + out_dir + "'");
  std::ofstream eval_log;

  for (; epoch_ < cfg_.epochs; ++epoch_) {
    std::vector<int64_t> order(n);
    for (int64_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(seed_mix(seed_mix(cfg_.seed, kShuffleStream),
                             static_cast<uint64_t>(epoch_)));
    for (int64_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);

    // On resume, skip the batches this epoch already covered.
    const int64_t done = static_cast<int64_t>(step_) - epoch_ * steps_per_epoch;
    for (int64_t b = std::max<int64_t>(0, done); b < steps_per_epoch; ++b) {
      std::vector<DatasetItem> batch_items;
      for (int64_t k = 0; k < batch; ++k) {
        const int64_t slot = b * batch + k;
        Rng aug_rng(seed_mix(seed_mix(cfg_.seed, kAugmentStream),
                             seed_mix(static_cast<uint64_t>(epoch_),
                                      static_cast<uint64_t>(slot))));
        batch_items.push_back(
            augment(split.train[order[slot % n]], aug_rng, cfg_.augment));
      }
      const losses::LossReport report = train_step(batch_items);

      if (static_cast<int64_t>(step_) % cfg_.log_every == 0) {
        json line = {{"step", step_},         {"epoch", epoch_},
                     {"disc", report.disc},   {"gan", report.gan},
                     {"feature_match", report.feature_match},
                     {"perceptual", report.perceptual},
                     {"kld", report.kld},     {"reg", report.reg},
                     {"total", report.total}};
        log << line.dump() << "\n" << std::flush;
      }
      if (cfg_.checkpoint_every > 0 &&
          static_cast<int64_t>(step_) % cfg_.checkpoint_every == 0)
        save((fs::path(out_dir) / ("checkpoint_" + std::to_string(step_) + ".bin"))
                 .string());
      if (cfg_.eval_every > 0 && static_cast<int64_t>(step_) % cfg_.eval_every == 0 &&
          split.holdout.size() >= 2) {
        const metrics::MetricReport mr = evaluate(split.holdout);
        if (!eval_log.is_open())
          eval_log.open((fs::path(out_dir) / "eval_log.jsonl").string(),
                        fresh_run ? std::ios::trunc : std::ios::app);
        json line = {{"step", step_}, {"fid", mr.fid}, {"ssim", mr.ssim},
                     {"pq", mr.pq}};
        eval_log << line.dump() << "\n" << std::flush;
      }
    }
  }
  save((fs::path(out_dir) / "checkpoint_final.bin").string());
}

Array<float> Trainer::synthesize(const featurize::InstanceMask& inst,
                                 const Array<float>& style_image, bool sample_style) {
  const int64_t s = cfg_.net.image_size;
  check(style_image.ndim() == 3 && style_image.dim(0) == 3 && style_image.dim(1) == s &&
            style_image.dim(2) == s,
        "synthesize: style image must be 3x" + std::to_string(s) + "x" +
            std::to_string(s));
  Array<float> batch({1, 3, s, s});
  std::copy(style_image.data(), style_image.data() + style_image.size(), batch.data());
  auto [mu, logvar] = enc_.forward(Var<float>::constant(batch));
  Var<float> style =
      sample_style ? net::reparameterize(mu, logvar, eps_rng_) : mu;
  const CondBatch cond = featurize_masks({inst}, cfg_.net);
  const Var<float> fake = gen_.forward(style, cond.pyramid);
  return fake.value().reshaped({3, s, s}).clone();
}

Array<float> Trainer::synthesize_with_style(const featurize::InstanceMask& inst,
                                            const Array<float>& style) {
  const int64_t s = cfg_.net.image_size;
  check(style.ndim() == 1 && style.dim(0) == cfg_.net.style_dim,
        "synthesize: style vector must have length " +
            std::to_string(cfg_.net.style_dim));
  Array<float> batch({1, cfg_.net.style_dim});
  std::copy(style.data(), style.data() + style.size(), batch.data());
  const CondBatch cond = featurize_masks({inst}, cfg_.net);
  const Var<float> fake =
      gen_.forward(Var<float>::constant(batch), cond.pyramid);
  return fake.value().reshaped({3, s, s}).clone();
}

metrics::MetricReport Trainer::evaluate(const std::vector<DatasetItem>& holdout) {
  check(holdout.size() >= 2, "evaluate: needs at least two held-out items");
  std::vector<Array<float>> real, fake;
  std::vector<featurize::InstanceMask> gt, pred;
  std::vector<std::string> organs;
  for (const auto& item : holdout) {
    real.push_back(item.image);
    fake.push_back(synthesize(item.inst, item.image));
    gt.push_back(item.inst);
    pred.push_back(item.inst);  // synthesis preserves the layout by design
    organs.push_back(item.organ);
  }
  return metrics::evaluate_sets(real, fake, gt, pred, organs, extractor_);
}

}  // namespace pipeline
}  // namespace sian
