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

// Command-line front end. Every subcommand takes the same configuration
// surface: --config <file.json> plus any number of --set dotted.key=value
// overrides, with --seed as a shorthand for the relevant seed fields.
//
// Exit codes: 0 success, 1 invalid input (bad flags, bad config, malformed
// data), 2 runtime failure (I/O errors, non-finite training, ...).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sian/core/blas.hpp"
#include "sian/downstream/downstream.hpp"
#include "sian/featurize/featurize.hpp"
#include "sian/io/image_convert.hpp"
#include "sian/io/maps.hpp"
#include "sian/io/png_io.hpp"
#include "sian/maskgen/maskgen.hpp"
#include "sian/pipeline/config.hpp"
#include "sian/pipeline/dataset.hpp"
#include "sian/pipeline/trainer.hpp"

namespace fs = std::filesystem;

namespace {

using sian::Array;
using sian::check;

// Options shared by every subcommand.
struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--config", opts->config_path,
                  "JSON configuration file (defaults apply when omitted)");
  cmd->add_option("--set", opts->overrides,
                  "Override one config key, e.g. --set train.lr_g=5e-4");
  cmd->add_option("--seed", opts->seed, "Override every random seed")
      ->each([opts](const std::string&) { opts->seed_set = true; });
}

sian::pipeline::TrainConfig load_cfg(const CommonOpts& opts) {
  sian::pipeline::TrainConfig cfg =
      sian::pipeline::load_config(opts.config_path, opts.overrides);
  if (opts.seed_set) {
    cfg.seed = opts.seed;
    cfg.maskgen.layout.seed = opts.seed;
  }
  return cfg;
}

sian::featurize::InstanceMask read_mask(const std::string& path) {
  const Array<uint16_t> raw = sian::io::read_gray16_png(path);
  sian::featurize::InstanceMask inst(raw.shape());
  for (int64_t i = 0; i < raw.size(); ++i)
    inst[i] = static_cast<int32_t>(raw[i]);
  const std::vector<std::string> problems = sian::featurize::validate_mask(inst);
  if (!problems.empty()) {
    std::string msg = path + ": not a valid instance mask";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
  return inst;
}

// Itemized ingest diagnostics; returns the usable items.
std::vector<sian::pipeline::DatasetItem> ingest_or_die(const std::string& dir,
                                                       int64_t patch_size) {
  sian::pipeline::IngestResult res = sian::pipeline::ingest(dir, patch_size);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& e : res.errors)
    std::cerr << "warning: skipped " << e.file << ": " << e.message << "\n";
  if (res.items.empty())
    throw std::invalid_argument("no usable image/mask pairs in '" + dir + "'");
  return res.items;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), "cannot write '" + path + "'");
  out << text;
  check(out.good(), "cannot write '" + path + "'");
}

int cmd_featurize(const CommonOpts& opts, const std::string& mask_path,
                  const std::string& out_path) {
  (void)load_cfg(opts);  // surface config errors even though no key is used
  const sian::featurize::InstanceMask inst = read_mask(mask_path);
  const sian::featurize::ConditionMaps maps = sian::featurize::featurize(inst);
  sian::io::save_maps(out_path, {{"semantic", maps.semantic},
                                 {"direction", maps.direction},
                                 {"distance", maps.distance}});
  std::cout << "featurized " << inst.dim(0) << "x" << inst.dim(1) << " mask -> "
            << out_path << "\n";
  return 0;
}

int cmd_maskgen(const CommonOpts& opts, const std::string& out_dir,
                int64_t count) {
  const sian::pipeline::TrainConfig cfg = load_cfg(opts);
  const int64_t n = count > 0 ? count : cfg.maskgen.count;
  const std::vector<sian::maskgen::ManifestEntry> entries =
      sian::maskgen::generate_mask_dataset(n, cfg.maskgen.layout,
                                           cfg.maskgen.nucleus, out_dir);
  int64_t instances = 0;
  for (const auto& e : entries) instances += e.instances;
  std::cout << "wrote " << entries.size() << " masks (" << instances
            << " nuclei) to " << out_dir << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& data_dir,
              const std::string& out_dir, const std::string& resume_path) {
  sian::pipeline::Trainer trainer =
      resume_path.empty()
          ? sian::pipeline::Trainer(load_cfg(opts))
          : sian::pipeline::Trainer::from_checkpoint(resume_path);
  if (!resume_path.empty())
    std::cout << "resuming from " << resume_path << " at step "
              << trainer.step() << " (checkpoint config takes precedence)\n";

  const std::vector<sian::pipeline::DatasetItem> items =
      ingest_or_die(data_dir, trainer.config().net.image_size);

  fs::create_directories(out_dir);
  std::cout << "training on " << items.size() << " patches of "
            << trainer.config().net.image_size << "x"
            << trainer.config().net.image_size << " for "
            << trainer.config().epochs << " epochs\n";
  trainer.fit(items, out_dir);
  std::cout << "finished at step " << trainer.step() << "; final checkpoint: "
            << (fs::path(out_dir) / "checkpoint_final.bin").string() << "\n";
  return 0;
}

int cmd_synthesize(const CommonOpts& opts, const std::string& ckpt_path,
                   const std::string& mask_path, const std::string& style_path,
                   const std::string& out_path, bool sample) {
  sian::pipeline::Trainer trainer =
      sian::pipeline::Trainer::from_checkpoint(ckpt_path);
  if (opts.seed_set) trainer.reseed_style_stream(opts.seed);

  const sian::featurize::InstanceMask inst = read_mask(mask_path);
  const Array<float> style =
      sian::io::u8_to_float_chw(sian::io::read_rgb8_png(style_path));
  const Array<float> img = trainer.synthesize(inst, style, sample);
  sian::io::write_rgb8_png(out_path, sian::io::float_chw_to_u8(img));
  std::cout << "synthesized " << out_path << " ("
            << (sample ? "sampled" : "posterior-mean") << " style)\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& real_dir,
                 const std::string& fake_dir, const std::string& out_dir) {
  const sian::pipeline::TrainConfig cfg = load_cfg(opts);
  const auto real_items = ingest_or_die(real_dir, cfg.net.image_size);
  const auto fake_items = ingest_or_die(fake_dir, cfg.net.image_size);

  // Pair patches across the two directories by source and grid position.
  std::map<std::string, const sian::pipeline::DatasetItem*> fake_by_key;
  for (const auto& item : fake_items)
    fake_by_key[item.source_id + "#" + std::to_string(item.patch_index)] = &item;

  std::vector<Array<float>> real, fake;
  std::vector<sian::featurize::InstanceMask> gt, pred;
  std::vector<std::string> organs;
  for (const auto& item : real_items) {
    const std::string key =
        item.source_id + "#" + std::to_string(item.patch_index);
    const auto it = fake_by_key.find(key);
    if (it == fake_by_key.end())
      throw std::invalid_argument("no patch '" + key + "' under '" + fake_dir +
                                  "' matching '" + real_dir + "'");
    real.push_back(item.image);
    fake.push_back(it->second->image);
    gt.push_back(item.inst);
    pred.push_back(it->second->inst);
    organs.push_back(item.organ);
  }

  const sian::net::FeatureExtractor<float> extractor(
      cfg.extractor.seed, cfg.extractor.channels, cfg.extractor.include_input,
      cfg.extractor.layer_weights);
  const sian::metrics::MetricReport report =
      sian::metrics::evaluate_sets(real, fake, gt, pred, organs, extractor);

  fs::create_directories(out_dir);
  const std::string json_text = sian::metrics::report_to_json(report);
  write_text_file((fs::path(out_dir) / "report.json").string(), json_text);
  write_text_file((fs::path(out_dir) / "report.csv").string(),
                  sian::metrics::report_to_csv(report));
  std::cout << json_text << "\n";
  return 0;
}

int cmd_experiment(const CommonOpts& opts, const std::string& data_dir,
                   const std::string& ckpt_path, const std::string& out_dir,
                   const sian::downstream::ExperimentConfig& knobs) {
  const sian::pipeline::TrainConfig cfg = load_cfg(opts);
  const auto items = ingest_or_die(data_dir, cfg.net.image_size);

  sian::downstream::ExperimentConfig ex = knobs;
  ex.seed = opts.seed_set ? opts.seed : cfg.seed;
  ex.layout = cfg.maskgen.layout;
  ex.nucleus = cfg.maskgen.nucleus;
  if (cfg.holdout_fraction > 0.0) ex.holdout_fraction = cfg.holdout_fraction;

  const sian::downstream::ExperimentReport report =
      sian::downstream::run_augmentation_experiment(items, ckpt_path, ex);

  fs::create_directories(out_dir);
  const std::string text = sian::downstream::experiment_to_text(report);
  write_text_file((fs::path(out_dir) / "report.csv").string(),
                  sian::downstream::experiment_to_csv(report));
  write_text_file((fs::path(out_dir) / "report.txt").string(), text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  sian::use_single_thread_blas();

  CLI::App app{"nuclei-conditioned histopathology image synthesis toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto* c_feat = app.add_subcommand(
      "featurize", "Convert an instance mask into its condition maps");
  std::string mask_path, out_path;
  add_common(c_feat, &opts);
  c_feat->add_option("--mask", mask_path, "16-bit instance mask PNG")
      ->required();
  c_feat->add_option("--out", out_path, "Output map container")->required();

  auto* c_mask = app.add_subcommand(
      "maskgen", "Sample synthetic nucleus layouts as instance masks");
  std::string mg_out;
  int64_t mg_count = 0;
  add_common(c_mask, &opts);
  c_mask->add_option("--out", mg_out, "Output directory")->required();
  c_mask->add_option("--count", mg_count,
                     "Number of masks (default: maskgen.count)");

  auto* c_train =
      app.add_subcommand("train", "Train the synthesis model on a dataset");
  std::string data_dir, train_out, resume_path;
  add_common(c_train, &opts);
  c_train->add_option("--data", data_dir, "Dataset directory with manifest.jsonl")
      ->required();
  c_train->add_option("--out", train_out, "Run directory for logs/checkpoints")
      ->required();
  c_train->add_option("--resume", resume_path, "Checkpoint to continue from");

  auto* c_synth = app.add_subcommand(
      "synthesize", "Render one mask in the style of a reference image");
  std::string sy_ckpt, sy_mask, sy_style, sy_out;
  bool sy_sample = false;
  add_common(c_synth, &opts);
  c_synth->add_option("--checkpoint", sy_ckpt, "Trained checkpoint")->required();
  c_synth->add_option("--mask", sy_mask, "16-bit instance mask PNG")->required();
  c_synth->add_option("--style-image", sy_style, "RGB style reference PNG")
      ->required();
  c_synth->add_option("--out", sy_out, "Output RGB PNG")->required();
  c_synth->add_flag("--sample", sy_sample,
                    "Draw the style from the posterior instead of its mean");

  auto* c_eval = app.add_subcommand(
      "evaluate", "Score a synthetic set against its real counterpart");
  std::string ev_real, ev_fake, ev_out;
  add_common(c_eval, &opts);
  c_eval->add_option("--real", ev_real, "Real dataset directory")->required();
  c_eval->add_option("--fake", ev_fake, "Synthetic dataset directory")
      ->required();
  c_eval->add_option("--out", ev_out, "Report directory")->required();

  auto* c_exp = app.add_subcommand(
      "augment-experiment",
      "Measure segmentation utility of synthetic training data");
  std::string ax_data, ax_ckpt, ax_out;
  sian::downstream::ExperimentConfig knobs;
  add_common(c_exp, &opts);
  c_exp->add_option("--data", ax_data, "Real dataset directory")->required();
  c_exp->add_option("--checkpoint", ax_ckpt, "Trained checkpoint")->required();
  c_exp->add_option("--out", ax_out, "Report directory")->required();
  c_exp->add_option("--synthetic", knobs.synthetic_count,
                    "Synthetic patches added in the third row");
  c_exp->add_option("--classic-copies", knobs.classic_copies,
                    "Augmented copies per real patch in rows 2-3");
  c_exp->add_option("--seg-epochs", knobs.seg_epochs, "Segmenter epochs");
  c_exp->add_option("--seg-batch", knobs.seg_batch, "Segmenter batch size");
  c_exp->add_option("--seg-lr", knobs.seg_lr, "Segmenter learning rate");
  c_exp->add_option("--seg-filters", knobs.seg_filters,
                    "Segmenter base filter count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // help text, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.get_name() << ": " << e.what() << "\n"
              << app.help() << std::flush;
    return 1;
  }

  try {
    if (c_feat->parsed()) return cmd_featurize(opts, mask_path, out_path);
    if (c_mask->parsed()) return cmd_maskgen(opts, mg_out, mg_count);
    if (c_train->parsed())
      return cmd_train(opts, data_dir, train_out, resume_path);
    if (c_synth->parsed())
      return cmd_synthesize(opts, sy_ckpt, sy_mask, sy_style, sy_out, sy_sample);
    if (c_eval->parsed()) return cmd_evaluate(opts, ev_real, ev_fake, ev_out);
    if (c_exp->parsed())
      return cmd_experiment(opts, ax_data, ax_ckpt, ax_out, knobs);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
