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

#include "sian/pipeline/dataset.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"
#include "sian/featurize/transforms.hpp"
#include "sian/io/image_convert.hpp"
#include "sian/io/png_io.hpp"

namespace sian {
namespace pipeline {
namespace {

namespace fs = std::filesystem;
using featurize::InstanceMask;
using nlohmann::json;

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// [3,H,W] float image and [H,W] mask padded to multiples of `patch` by
// edge-inclusive mirroring, then cropped at (py, px) in patch units.
Array<float> crop_image(const Array<float>& img, int64_t patch, int64_t py, int64_t px) {
  const int64_t h = img.dim(1), w = img.dim(2);
  Array<float> out({3, patch, patch});
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < patch; ++y) {
      const int64_t sy = mirror_index(py * patch + y, h);
      for (int64_t x = 0; x < patch; ++x) {
        const int64_t sx = mirror_index(px * patch + x, w);
        out[(c * patch + y) * patch + x] = img[(c * h + sy) * w + sx];
      }
    }
  return out;
}

InstanceMask crop_mask(const InstanceMask& inst, int64_t patch, int64_t py, int64_t px) {
  const int64_t h = inst.dim(0), w = inst.dim(1);
  InstanceMask out({patch, patch});
  for (int64_t y = 0; y < patch; ++y) {
    const int64_t sy = mirror_index(py * patch + y, h);
    for (int64_t x = 0; x < patch; ++x)
      out[y * patch + x] = inst[sy * w + mirror_index(px * patch + x, w)];
  }
  return out;
}

Array<float> stack_chw(const std::vector<Array<float>>& parts) {
  const int64_t n = static_cast<int64_t>(parts.size());
  const auto& s = parts[0].shape();
  Array<float> out({n, s[0], s[1], s[2]});
  const int64_t stride = parts[0].size();
  for (int64_t i = 0; i < n; ++i) {
    check(parts[i].shape() == s, "stack: mismatched shapes");
    std::copy(parts[i].data(), parts[i].data() + stride, out.data() + i * stride);
  }
  return out;
}

}  // namespace

int64_t mirror_index(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t p = i % (2 * n);
  return p < n ? p : 2 * n - 1 - p;
}

featurize::InstanceMask split_same_label_components(const InstanceMask& inst) {
  check(inst.ndim() == 2, "split_same_label_components: expected [H,W]");
  const int64_t h = inst.dim(0), w = inst.dim(1);
  InstanceMask out = Array<int32_t>::zeros({h, w});
  int32_t next = 0;
  std::deque<int64_t> queue;
  for (int64_t start = 0; start < h * w; ++start) {
    if (inst[start] == 0 || out[start] != 0) continue;
    const int32_t label = inst[start];
    out[start] = ++next;
    queue.push_back(start);
    while (!queue.empty()) {
      const int64_t idx = queue.front();
      queue.pop_front();
      const int64_t y = idx / w, x = idx % w;
      const int64_t nbrs[4] = {idx - w, idx + w, idx - 1, idx + 1};
      const bool ok[4] = {y > 0, y < h - 1, x > 0, x < w - 1};
      for (int k = 0; k < 4; ++k) {
        if (!ok[k] || inst[nbrs[k]] != label || out[nbrs[k]] != 0) continue;
        out[nbrs[k]] = next;
        queue.push_back(nbrs[k]);
      }
    }
  }
  return out;
}

IngestResult ingest(const std::string& dir, int64_t patch_size) {
  if (patch_size < 1) throw std::invalid_argument("ingest: patch_size must be >= 1");
  if (!fs::is_directory(dir))
    throw std::invalid_argument("ingest: '" + dir + "' is not a directory");

  IngestResult result;
  const fs::path manifest = fs::path(dir) / "manifest.jsonl";
  std::ifstream in(manifest);
  if (!in) {
    result.warnings.push_back("no manifest.jsonl in '" + dir +
                              "'; returning an empty dataset");
    return result;
  }

  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest.jsonl:" + std::to_string(lineno);

    json entry = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (entry.is_discarded() || !entry.is_object()) {
      result.errors.push_back({where, "line is not a JSON object"});
      continue;
    }
    if (!entry.contains("image") || !entry.contains("mask") || !entry.contains("organ") ||
        !entry["image"].is_string() || !entry["mask"].is_string() ||
        !entry["organ"].is_string()) {
      result.errors.push_back({where, "entry needs string fields image, mask, organ"});
      continue;
    }
    const std::string image_file = entry["image"].get<std::string>();
    const std::string mask_file = entry["mask"].get<std::string>();
    const std::string organ = entry["organ"].get<std::string>();

    Array<float> image;
    InstanceMask inst;
    try {
      const Array<uint8_t> rgb = io::read_rgb8_png((fs::path(dir) / image_file).string());
      image = io::u8_to_float_chw(rgb);
    } catch (const std::exception& e) {
      result.errors.push_back({image_file, e.what()});
      continue;
    }
    try {
      const Array<uint16_t> raw = io::read_gray16_png((fs::path(dir) / mask_file).string());
      inst = raw.astype<int32_t>();
    } catch (const std::exception& e) {
      result.errors.push_back({mask_file, e.what()});
      continue;
    }
    if (image.dim(1) != inst.dim(0) || image.dim(2) != inst.dim(1)) {
      result.errors.push_back({image_file, "image and mask sizes differ"});
      continue;
    }

    const int64_t rows = (image.dim(1) + patch_size - 1) / patch_size;
    const int64_t cols = (image.dim(2) + patch_size - 1) / patch_size;
    for (int64_t py = 0; py < rows; ++py)
      for (int64_t px = 0; px < cols; ++px) {
        DatasetItem item;
        item.image = crop_image(image, patch_size, py, px);
        item.inst = split_same_label_components(crop_mask(inst, patch_size, py, px));
        item.organ = organ;
        item.source_id = stem_of(image_file);
        item.patch_index = py * cols + px;
        const auto problems = featurize::validate_mask(item.inst);
        if (!problems.empty()) {
          result.errors.push_back(
              {mask_file, "patch " + std::to_string(item.patch_index) +
                              " invalid after relabel: " + problems.front()});
          continue;
        }
        result.items.push_back(std::move(item));
      }
  }
  return result;
}

DatasetItem apply_geometric(const DatasetItem& item, bool flip_h, bool flip_v,
                            int quarter_turns) {
  DatasetItem out = item;
  if (flip_h) {
    out.image = featurize::flip_h_chw(out.image);
    out.inst = featurize::flip_h_grid(out.inst);
  }
  if (flip_v) {
    out.image = featurize::flip_v_chw(out.image);
    out.inst = featurize::flip_v_grid(out.inst);
  }
  for (int k = 0; k < ((quarter_turns % 4) + 4) % 4; ++k) {
    out.image = featurize::rot90_chw(out.image);
    out.inst = featurize::rot90_grid(out.inst);
  }
  return out;
}

Array<float> median_blur3(const Array<float>& img) {
  check(img.ndim() == 3, "median_blur3: expected [C,H,W]");
  const int64_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
  Array<float> out(img.shape());
  float window[9];
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        int n = 0;
        for (int64_t dy = -1; dy <= 1; ++dy)
          for (int64_t dx = -1; dx <= 1; ++dx) {
            const int64_t sy = std::clamp<int64_t>(y + dy, 0, h - 1);
            const int64_t sx = std::clamp<int64_t>(x + dx, 0, w - 1);
            window[n++] = img[(ch * h + sy) * w + sx];
          }
        std::nth_element(window, window + 4, window + 9);
        out[(ch * h + y) * w + x] = window[4];
      }
  return out;
}

DatasetItem augment(const DatasetItem& item, Rng& rng, const AugmentToggles& toggles) {
  const bool fh = toggles.flip_h && rng.bernoulli(0.5);
  const bool fv = toggles.flip_v && rng.bernoulli(0.5);
  const int turns = toggles.rot90 ? static_cast<int>(rng.uniform_int(0, 3)) : 0;
  DatasetItem out = apply_geometric(item, fh, fv, turns);
  if (toggles.median_blur && rng.bernoulli(0.5)) out.image = median_blur3(out.image);
  return out;
}

SplitResult split_by_source(const std::vector<DatasetItem>& items, double fraction,
                            uint64_t seed) {
  check(fraction >= 0.0 && fraction < 1.0, "split_by_source: fraction must be in [0, 1)");
  std::vector<std::string> sources;
  for (const auto& item : items)
    if (std::find(sources.begin(), sources.end(), item.source_id) == sources.end())
      sources.push_back(item.source_id);
  std::sort(sources.begin(), sources.end());

  SplitResult split;
  int64_t held = static_cast<int64_t>(
      std::ceil(fraction * static_cast<double>(sources.size())));
  if (sources.size() < 2 || fraction == 0.0) held = 0;

  Rng rng(seed_mix(seed, 0x51175eedULL));
  for (int64_t i = static_cast<int64_t>(sources.size()) - 1; i > 0; --i)
    std::swap(sources[i], sources[rng.uniform_int(0, i)]);
  const std::vector<std::string> holdout_ids(sources.begin(), sources.begin() + held);

  for (const auto& item : items) {
    const bool held_out = std::find(holdout_ids.begin(), holdout_ids.end(),
                                    item.source_id) != holdout_ids.end();
    (held_out ? split.holdout : split.train).push_back(item);
  }
  return split;
}

CondBatch featurize_masks(const std::vector<InstanceMask>& masks,
                          const net::NetConfig& cfg) {
  check(!masks.empty(), "featurize_masks: empty batch");
  std::vector<std::pair<int64_t, int64_t>> sizes;
  for (int64_t i = 0; i < cfg.num_blocks(); ++i)
    sizes.emplace_back(cfg.block_resolution(i), cfg.block_resolution(i));

  const int64_t levels = cfg.num_blocks();
  std::vector<std::vector<Array<float>>> m(levels + 1), p(levels + 1), q(levels + 1);
  for (const auto& mask : masks) {
    check(mask.ndim() == 2 && mask.dim(0) == cfg.image_size && mask.dim(1) == cfg.image_size,
          "featurize_masks: mask must be " + std::to_string(cfg.image_size) + "x" +
              std::to_string(cfg.image_size));
    const featurize::ConditionMaps native = featurize::featurize(mask);
    const auto pyramid = featurize::build_condition_pyramid(native, sizes);
    for (int64_t l = 0; l < levels; ++l) {
      m[l].push_back(pyramid[l].semantic);
      p[l].push_back(pyramid[l].direction);
      q[l].push_back(pyramid[l].distance);
    }
    m[levels].push_back(native.semantic);
    p[levels].push_back(native.direction);
    q[levels].push_back(native.distance);
  }

  CondBatch out;
  for (int64_t l = 0; l < levels; ++l)
    out.pyramid.push_back({stack_chw(m[l]), stack_chw(p[l]), stack_chw(q[l])});
  out.native = {stack_chw(m[levels]), stack_chw(p[levels]), stack_chw(q[levels])};
  return out;
}

BatchTensors make_batch(const std::vector<DatasetItem>& items, const net::NetConfig& cfg) {
  check(!items.empty(), "make_batch: empty batch");
  std::vector<Array<float>> images;
  std::vector<InstanceMask> masks;
  for (const auto& item : items) {
    images.push_back(item.image);
    masks.push_back(item.inst);
  }
  BatchTensors out;
  out.images = stack_chw(images);
  out.cond = featurize_masks(masks, cfg);
  return out;
}

}  // namespace pipeline
}  // namespace sian
