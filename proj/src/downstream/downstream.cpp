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

#include "sian/downstream/downstream.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "sian/core/ops.hpp"
#include "sian/metrics/metrics.hpp"
#include "sian/pipeline/trainer.hpp"

namespace sian {
namespace downstream {
namespace {

namespace fs = std::filesystem;
using featurize::InstanceMask;
using pipeline::DatasetItem;

constexpr double kNormEps = 1e-5;

// Stream ids hung off the experiment seed.
constexpr uint64_t kClassicStream = 0xC1A55u;
constexpr uint64_t kSyntheticStream = 0x5F7u;
constexpr uint64_t kSegInitStream = 0x5E6u;
constexpr uint64_t kSegShuffleStream = 0xD0u;

Var<float> norm_lrelu(Var<float> x) {
  return ops::leaky_relu(
      ops::moment_normalize(x, static_cast<float>(kNormEps), ops::NormMode::kInstance),
      0.2f);
}

// Trains a fresh segmenter on `items`; identical seeds make the result a
// pure function of the training set.
Segmenter train_segmenter(const std::vector<DatasetItem>& items,
                          const ExperimentConfig& cfg) {
  Segmenter seg(seed_mix(cfg.seed, kSegInitStream), cfg.seg_filters);
  std::vector<Var<float>> params;
  for (const auto& [name, var] : seg.params()) params.push_back(var);
  Adam<float> opt(params, {static_cast<float>(cfg.seg_lr), 0.9f, 0.999f, 1e-8f});

  const int64_t n = static_cast<int64_t>(items.size());
  const int64_t s = items[0].image.dim(1);
  const int64_t bs = std::min<int64_t>(cfg.seg_batch, n);
  const int64_t steps = std::max<int64_t>(1, n / cfg.seg_batch);

  std::vector<Array<int32_t>> targets;
  targets.reserve(items.size());
  for (const auto& item : items) targets.push_back(masks_to_seg_targets(item.inst));

  for (int64_t epoch = 0; epoch < cfg.seg_epochs; ++epoch) {
    std::vector<int64_t> order(n);
    for (int64_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed_mix(seed_mix(cfg.seed, kSegShuffleStream), static_cast<uint64_t>(epoch)));
    for (int64_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);

    for (int64_t b = 0; b < steps; ++b) {
      Array<float> images({bs, 3, s, s});
      Array<int32_t> labels({bs, s, s});
      for (int64_t k = 0; k < bs; ++k) {
        const int64_t idx = order[(b * bs + k) % n];
        std::copy(items[idx].image.data(), items[idx].image.data() + 3 * s * s,
                  images.data() + k * 3 * s * s);
        std::copy(targets[idx].data(), targets[idx].data() + s * s,
                  labels.data() + k * s * s);
      }
      opt.zero_grad();
      Var<float> loss =
          ops::softmax_cross_entropy(seg.forward(Var<float>::constant(images)), labels);
      check_runtime(std::isfinite(static_cast<double>(loss.value()[0])),
                    "segmenter loss went non-finite");
      loss.backward();
      opt.step();
    }
  }
  return seg;
}

ExperimentRow score_segmenter(Segmenter& seg, const std::vector<DatasetItem>& holdout,
                              const std::string& name) {
  metrics::PqAccumulator acc;
  for (const auto& item : holdout)
    acc.add(metrics::match_instances(item.inst, instances_from_seg(seg.predict(item.image))));
  const metrics::PqResult r = acc.result();
  return {name, r.dq, r.sq, r.pq};
}

}  // namespace

Array<int32_t> masks_to_seg_targets(const InstanceMask& inst) {
  check(inst.ndim() == 2, "masks_to_seg_targets: expected [H,W]");
  const int64_t h = inst.dim(0), w = inst.dim(1);
  Array<int32_t> out = Array<int32_t>::zeros({h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const int32_t label = inst[y * w + x];
      if (label == 0) continue;
      const bool edge =
          (y == 0 || inst[(y - 1) * w + x] != label) ||
          (y == h - 1 || inst[(y + 1) * w + x] != label) ||
          (x == 0 || inst[y * w + x - 1] != label) ||
          (x == w - 1 || inst[y * w + x + 1] != label);
      out[y * w + x] = edge ? kBoundary : kInterior;
    }
  return out;
}

featurize::InstanceMask instances_from_seg(const Array<int32_t>& classes) {
  check(classes.ndim() == 2, "instances_from_seg: expected [H,W]");
  const int64_t h = classes.dim(0), w = classes.dim(1);
  for (int64_t i = 0; i < classes.size(); ++i)
    check(classes[i] >= kBackground && classes[i] <= kBoundary,
          "instances_from_seg: class code out of range");

  InstanceMask out = Array<int32_t>::zeros({h, w});
  int32_t next = 0;
  std::deque<int64_t> queue;
  for (int64_t start = 0; start < h * w; ++start) {
    if (classes[start] != kInterior || out[start] != 0) continue;
    out[start] = ++next;
    queue.push_back(start);
    while (!queue.empty()) {
      const int64_t idx = queue.front();
      queue.pop_front();
      const int64_t y = idx / w, x = idx % w;
      const int64_t nbrs[4] = {idx - w, idx - 1, idx + 1, idx + w};
      const bool ok[4] = {y > 0, x > 0, x < w - 1, y < h - 1};
      for (int k = 0; k < 4; ++k) {
        if (!ok[k] || classes[nbrs[k]] != kInterior || out[nbrs[k]] != 0) continue;
        out[nbrs[k]] = next;
        queue.push_back(nbrs[k]);
      }
    }
  }

  // One dilation step: interior pixels claim adjacent boundary pixels in
  // raster order (N, W, E, S); the first claim sticks. Only pixels that were
  // interior before the step claim, so the growth is exactly one layer.
  for (int64_t idx = 0; idx < h * w; ++idx) {
    if (classes[idx] != kInterior) continue;
    const int64_t y = idx / w, x = idx % w;
    const int64_t nbrs[4] = {idx - w, idx - 1, idx + 1, idx + w};
    const bool ok[4] = {y > 0, x > 0, x < w - 1, y < h - 1};
    for (int k = 0; k < 4; ++k)
      if (ok[k] && classes[nbrs[k]] == kBoundary && out[nbrs[k]] == 0)
        out[nbrs[k]] = out[idx];
  }
  return out;
}

Segmenter::Segmenter(uint64_t seed, int64_t base_filters) {
  check(base_filters >= 1, "segmenter: base_filters must be >= 1");
  Rng rng(seed);
  const int64_t nf = base_filters;
  enc1_ = net::Conv2dLayer<float>::make(rng, 3, nf, 3, 1, 1);
  down1_ = net::Conv2dLayer<float>::make(rng, nf, 2 * nf, 3, 2, 1);
  down2_ = net::Conv2dLayer<float>::make(rng, 2 * nf, 4 * nf, 3, 2, 1);
  up1_ = net::Conv2dLayer<float>::make(rng, 4 * nf, 2 * nf, 3, 1, 1);
  up2_ = net::Conv2dLayer<float>::make(rng, 2 * nf, nf, 3, 1, 1);
  head_ = net::Conv2dLayer<float>::make(rng, nf, 3, 1, 1, 0);
}

Var<float> Segmenter::forward(Var<float> image) const {
  check(image.defined() && image.value().ndim() == 4 && image.value().dim(1) == 3,
        "segmenter: expected [N,3,H,W]");
  check(image.value().dim(2) % 4 == 0 && image.value().dim(3) % 4 == 0 &&
            image.value().dim(2) >= 4,
        "segmenter: height and width must be multiples of 4");
  Var<float> x = norm_lrelu(enc1_.forward(image));
  x = norm_lrelu(down1_.forward(x));
  x = norm_lrelu(down2_.forward(x));
  x = norm_lrelu(up1_.forward(ops::upsample_nearest2x(x)));
  x = norm_lrelu(up2_.forward(ops::upsample_nearest2x(x)));
  return head_.forward(x);
}

Array<int32_t> Segmenter::predict(const Array<float>& image) const {
  check(image.ndim() == 3 && image.dim(0) == 3, "segmenter: expected [3,H,W]");
  const int64_t h = image.dim(1), w = image.dim(2);
  Array<float> batch({1, 3, h, w});
  std::copy(image.data(), image.data() + image.size(), batch.data());
  const Array<float>& logits = forward(Var<float>::constant(batch)).value();
  Array<int32_t> out({h, w});
  for (int64_t p = 0; p < h * w; ++p) {
    int32_t best = 0;
    for (int32_t k = 1; k < 3; ++k)
      if (logits[k * h * w + p] > logits[best * h * w + p]) best = k;
    out[p] = best;
  }
  return out;
}

net::NamedVars<float> Segmenter::params() const {
  net::NamedVars<float> out;
  enc1_.collect("seg.enc1", &out);
  down1_.collect("seg.down1", &out);
  down2_.collect("seg.down2", &out);
  up1_.collect("seg.up1", &out);
  up2_.collect("seg.up2", &out);
  head_.collect("seg.head", &out);
  return out;
}

ExperimentReport run_augmentation_experiment(const std::vector<DatasetItem>& items,
                                             const std::string& checkpoint_path,
                                             const ExperimentConfig& cfg) {
  check(cfg.synthetic_count >= 0 && cfg.classic_copies >= 0,
        "experiment: counts must be >= 0");
  check(cfg.seg_epochs >= 1 && cfg.seg_batch >= 1 && cfg.seg_lr > 0,
        "experiment: segmenter schedule is invalid");
  check(!items.empty(), "experiment: no dataset items");
  if (!fs::exists(checkpoint_path))
    throw std::invalid_argument("experiment: checkpoint '" + checkpoint_path +
                                "' does not exist");

  pipeline::Trainer trainer = pipeline::Trainer::from_checkpoint(checkpoint_path);
  const int64_t s = trainer.config().net.image_size;
  for (const auto& item : items)
    check(item.image.dim(1) == s && item.image.dim(2) == s,
          "experiment: items must match the checkpoint resolution " + std::to_string(s));

  pipeline::SplitResult split =
      pipeline::split_by_source(items, cfg.holdout_fraction, cfg.seed);
  check(!split.holdout.empty(),
        "experiment: holdout split is empty; provide more than one source image");
  check(!split.train.empty(), "experiment: training split is empty");

  // Row 2 adds classic augmented copies of every real training patch.
  std::vector<DatasetItem> with_classic = split.train;
  const pipeline::AugmentToggles all_on;
  for (size_t i = 0; i < split.train.size(); ++i)
    for (int64_t c = 0; c < cfg.classic_copies; ++c) {
      Rng rng(seed_mix(seed_mix(cfg.seed, kClassicStream),
                       static_cast<uint64_t>(i) * static_cast<uint64_t>(cfg.classic_copies) +
                           static_cast<uint64_t>(c)));
      with_classic.push_back(pipeline::augment(split.train[i], rng, all_on));
    }

  // Row 3 adds generator output for fresh synthetic layouts, each rendered
  // in the style of a cycled real training patch.
  std::vector<DatasetItem> with_synthetic = with_classic;
  maskgen::LayoutParams layout = cfg.layout;
  layout.height = s;
  layout.width = s;
  maskgen::validate(layout);
  maskgen::validate(cfg.nucleus);
  for (int64_t k = 0; k < cfg.synthetic_count; ++k) {
    Rng rng(seed_mix(seed_mix(cfg.seed, kSyntheticStream), static_cast<uint64_t>(k)));
    const maskgen::MaskResult mask = maskgen::generate_instance_mask(rng, layout, cfg.nucleus);
    const DatasetItem& donor = split.train[static_cast<size_t>(k) % split.train.size()];
    DatasetItem item;
    item.inst = mask.mask;
    item.image = trainer.synthesize(item.inst, donor.image);
    item.organ = donor.organ;
    item.source_id = "synthetic_" + std::to_string(k);
    with_synthetic.push_back(std::move(item));
  }

  ExperimentReport report;
  report.train_items = static_cast<int64_t>(split.train.size());
  report.holdout_items = static_cast<int64_t>(split.holdout.size());
  {
    Segmenter seg = train_segmenter(split.train, cfg);
    report.rows.push_back(score_segmenter(seg, split.holdout, "real"));
  }
  {
    Segmenter seg = train_segmenter(with_classic, cfg);
    report.rows.push_back(score_segmenter(seg, split.holdout, "real+classic"));
  }
  {
    Segmenter seg = train_segmenter(with_synthetic, cfg);
    report.rows.push_back(
        score_segmenter(seg, split.holdout, "real+classic+synthetic"));
  }
  return report;
}

std::string experiment_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "training_set,dq,sq,pq\n";
  out << std::setprecision(17);
  for (const auto& row : report.rows)
    out << row.name << "," << row.dq << "," << row.sq << "," << row.pq << "\n";
  return out.str();
}

std::string experiment_to_text(const ExperimentReport& report) {
  std::ostringstream out;
  out << "segmentation utility (" << report.train_items << " train / "
      << report.holdout_items << " holdout patches)\n";
  out << std::left << std::setw(26) << "training set" << std::right << std::setw(8)
      << "DQ" << std::setw(8) << "SQ" << std::setw(8) << "PQ" << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& row : report.rows)
    out << std::left << std::setw(26) << row.name << std::right << std::setw(8)
        << row.dq << std::setw(8) << row.sq << std::setw(8) << row.pq << "\n";
  return out.str();
}

}  // namespace downstream
}  // namespace sian
