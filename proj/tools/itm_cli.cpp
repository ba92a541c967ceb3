// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the library only through itm.h.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itm/itm.h"

namespace {

struct Common
{
  std::string config;
  std::optional<std::uint64_t> seed;
  bool toy = false;
  std::vector<std::string> overrides;
};

class Config
{
public:
  Config() = default;
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  ~Config() { itm_config_free(cfg_); }

  itm_config* get() const { return cfg_; }
  itm_config** out() { return &cfg_; }

private:
  itm_config* cfg_ = nullptr;
};

int report(itm_status s)
{
  if (s != ITM_OK)
    std::cerr << "itm: error: " << itm_last_error() << '\n';
  return static_cast<int>(s);
}

void add_common(CLI::App* cmd, Common& c)
{
  cmd->add_option("--config", c.config, "RunConfig JSON file (defaults to $ITM_CONFIG)");
  cmd->add_option("--seed", c.seed, "Master seed for initialization, sampling and noise");
  cmd->add_flag("--toy", c.toy, "Start from the small network and training presets");
  cmd->add_option("--set", c.overrides, "JSON object merged into the config, repeatable");
}

itm_status load_config(const Common& c, Config& cfg)
{
  if (auto s = itm_config_load(c.config.empty() ? nullptr : c.config.c_str(), c.toy, cfg.out()); s != ITM_OK)
    return s;
  for (const auto& o : c.overrides)
    if (auto s = itm_config_merge_json(cfg.get(), o.c_str()); s != ITM_OK)
      return s;
  if (c.seed)
    return itm_config_set_seed(cfg.get(), *c.seed);
  return ITM_OK;
}

const char* or_null(const std::string& s)
{
  return s.empty() ? nullptr : s.c_str();
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Inverse tone mapping toolkit"};
  app.set_version_flag("--version", std::string(itm_version()));
  app.require_subcommand(1);
  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize LDR/HDR training pairs from an HDR directory");
  std::string hdr_dir, out;
  synth->add_option("--hdr-dir", hdr_dir, "Directory of .hdr/.pfm images")->required();
  synth->add_option("--out", out, "Output dataset directory")->required();
  add_common(synth, common);

  // train
  auto* train = app.add_subcommand("train", "Train a network on a synthesized dataset");
  std::string data_dir, resume;
  std::size_t log_every = 100;
  train->add_option("--data", data_dir, "Dataset directory written by synth")->required();
  train->add_option("--out", out, "Output directory for checkpoint.itmc and loss.csv")->required();
  train->add_option("--resume", resume, "Checkpoint to continue from");
  train->add_option("--log-every", log_every, "Progress line interval (0 disables)");
  add_common(train, common);

  // infer
  auto* infer = app.add_subcommand("infer", "Reconstruct an HDR image from an LDR image");
  std::string checkpoint, input, mask_png, preview_dir;
  infer->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  infer->add_option("--input", input, "LDR image (.png or .jpg)")->required();
  infer->add_option("--out", out, "Output .hdr or .pfm")->required();
  infer->add_option("--mask", mask_png, "Also write the saturation mask as PNG");
  infer->add_option("--preview", preview_dir, "Also write an exposure stack of the result");

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions against references in PU space");
  std::string pred_dir, ref_dir;
  eval->add_option("--pred", pred_dir, "Directory of predicted .hdr/.pfm")->required();
  eval->add_option("--ref", ref_dir, "Directory of reference .hdr/.pfm")->required();
  eval->add_option("--out", out, "Metrics CSV")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Train every architecture and mask variant and compare");
  std::vector<std::uint64_t> seeds;
  ablate->add_option("--data", data_dir, "Dataset directory (default: four procedural scenes)");
  ablate->add_option("--out", out, "Comparison CSV")->required();
  ablate->add_option("--seeds", seeds, "Seeds to run, overrides --seed")->delimiter(',');
  add_common(ablate, common);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and numerical gradients");
  std::uint64_t gc_seed = 0;
  gradcheck->add_option("--seed", gc_seed, "Seed for the random test points");

  // preview
  auto* preview = app.add_subcommand("preview", "Write an exposure stack and a tone-mapped image");
  std::vector<double> exposures;
  std::string crf = "identity";
  preview->add_option("--input", input, "HDR image (.hdr or .pfm)")->required();
  preview->add_option("--out", out, "Output directory")->required();
  preview->add_option("--exposures", exposures, "Exposure times (default 0.01,0.1,1,4,8)")->delimiter(',');
  preview->add_option("--crf", crf, "identity, gamma:<g>, gamma-family:<n> or a DoRF file");

  // dump-activations
  auto* dump = app.add_subcommand("dump-activations", "Write LAMN modulation maps as PNG images");
  dump->add_option("--checkpoint", checkpoint, "Trained checkpoint (default: fresh network from the config)");
  dump->add_option("--input", input, "LDR image")->required();
  dump->add_option("--out", out, "Output directory")->required();
  add_common(dump, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  if (*synth) {
    Config cfg;
    if (auto s = load_config(common, cfg); s != ITM_OK)
      return report(s);
    std::size_t pairs = 0;
    const auto s = itm_synth(cfg.get(), hdr_dir.c_str(), out.c_str(), common.seed.value_or(0), &pairs);
    if (s == ITM_OK)
      std::cout << "wrote " << pairs << " pairs to " << out << '\n';
    return report(s);
  }

  if (*train) {
    Config cfg;
    if (auto s = load_config(common, cfg); s != ITM_OK)
      return report(s);
    auto progress = [](size_t it, double lr, double t1, double t2, double total, void* user) -> int {
      const auto every = *static_cast<std::size_t*>(user);
      if (every != 0 && (it + 1) % every == 0)
        std::printf("iter %zu  lr %.3g  term1 %.6g  term2 %.6g  loss %.6g\n", it + 1, lr, t1, t2, total);
      return 0;
    };
    itm_train_result r{};
    const auto s = itm_train(cfg.get(), data_dir.c_str(), out.c_str(), or_null(resume), progress, &log_every, &r);
    if (s == ITM_OK)
      std::printf("trained %zu iterations, final loss %.6g\n", r.iterations, r.total);
    return report(s);
  }

  if (*infer)
    return report(itm_infer(checkpoint.c_str(), input.c_str(), out.c_str(), or_null(mask_png), or_null(preview_dir)));

  if (*eval) {
    itm_metrics m{};
    const auto s = itm_eval(pred_dir.c_str(), ref_dir.c_str(), out.c_str(), &m);
    if (s == ITM_OK)
      std::printf("%zu pairs  PU-PSNR %.3f dB  PU-SSIM %.4f  PU-MS-SSIM %.4f\n", m.pairs, m.pu_psnr_db, m.pu_ssim,
                  m.pu_ms_ssim);
    return report(s);
  }

  if (*ablate) {
    Config cfg;
    if (auto s = load_config(common, cfg); s != ITM_OK)
      return report(s);
    if (seeds.empty())
      seeds.push_back(common.seed.value_or(0));
    std::printf("%-9s %6s %8s %12s %10s\n", "variant", "seed", "iters", "final_loss", "pu_psnr");
    auto row = [](const itm_ablation_row* r, void*) {
      std::printf("%-9s %6llu %8zu %12.6g %10.3f\n", r->variant, static_cast<unsigned long long>(r->seed),
                  r->iterations, r->final_loss, r->pu_psnr_db);
      std::fflush(stdout);
    };
    return report(itm_ablate(cfg.get(), or_null(data_dir), seeds.data(), seeds.size(), out.c_str(), row, nullptr));
  }

  if (*gradcheck) {
    std::printf("%-28s %12s %7s  %s\n", "check", "rel_error", "coords", "result");
    auto row = [](const char* name, double err, size_t coords, int pass, void*) {
      std::printf("%-28s %12.3e %7zu  %s\n", name, err, coords, pass ? "pass" : "FAIL");
      std::fflush(stdout);
    };
    int all_pass = 0;
    const auto s = itm_gradcheck(gc_seed, row, nullptr, &all_pass);
    if (s != ITM_OK)
      return report(s);
    if (!all_pass) {
      std::cerr << "itm: gradient check failed\n";
      return 1;
    }
    return 0;
  }

  if (*preview)
    return report(itm_preview(input.c_str(), out.c_str(), exposures.empty() ? nullptr : exposures.data(),
                              exposures.size(), crf.c_str()));

  if (*dump) {
    Config cfg;
    if (checkpoint.empty())
      if (auto s = load_config(common, cfg); s != ITM_OK)
        return report(s);
    std::size_t files = 0;
    const auto s = itm_dump_activations(or_null(checkpoint), cfg.get(), input.c_str(), out.c_str(), &files);
    if (s == ITM_OK)
      std::cout << "wrote " << files << " images to " << out << '\n';
    return report(s);
  }
  return 0;
}
