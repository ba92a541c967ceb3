// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "itm/config.hpp"
#include "itm/metrics.hpp"
#include "itm/training.hpp"

namespace itm {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.json";

struct SynthSummary
{
  std::size_t sources = 0;
  std::size_t pairs = 0;
  fs::path manifest;
};

/// Runs every (HDR file, exposure, CRF) combination through the LDR pipeline.
/// Writes <id>_ldr.png, <id>_hdr.pfm (H*t) and <id>_crf.pfm (F(C(H*t))) per
/// pair plus manifest.json. Per-pair RNG streams derive from `seed` and the
/// pair index.
SynthSummary synthesize_dataset(const RunConfig& cfg, const fs::path& hdr_dir, const fs::path& out_dir,
                                 std::uint64_t seed);

/// Loads a directory written by synthesize_dataset.
std::vector<TrainingSample> load_dataset(const fs::path& dir);

/// In-memory equivalent used by tests and the ablation driver: `count`
/// procedural scenes of size x size, one exposure each, identity CRF.
std::vector<TrainingSample> procedural_dataset(std::size_t count, std::size_t size, std::uint64_t seed,
                                               double exposure = 1.0);

/// Returns false to stop training after the current iteration.
using ProgressFn = std::function<bool(const LossLogRow&)>;

struct TrainSummary
{
  std::size_t iterations = 0;
  LossValue final_loss;
  fs::path checkpoint;
  fs::path loss_log;
};

/// Trains on a synthesized directory and writes checkpoint.itmc and loss.csv
/// into `out_dir`. A divergence leaves checkpoint_last_good.itmc behind.
TrainSummary run_training(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
                          const std::optional<fs::path>& resume = std::nullopt, const ProgressFn& progress = {});

/// Mask variant and tau recorded in a checkpoint's config echo, or defaults.
struct InferenceSettings
{
  double tau = kDefaultTau;
  MaskVariant mask_variant = MaskVariant::Default;
};
InferenceSettings inference_settings(const nlohmann::json& echo);

struct InferOutputs
{
  std::optional<fs::path> mask_png;
  std::optional<fs::path> preview_dir;
};

Prediction run_inference(const fs::path& checkpoint, const fs::path& ldr_path, const fs::path& out_hdr,
                         const InferOutputs& extra = {});

struct AblationRow
{
  std::string variant;  // default, configA .. configE
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  LossValue final_loss;
  double pu_psnr_db = 0.0;  // H vs H*t, mean over the dataset
};

/// The six variants: default, configA, configB (network), configC/D/E (mask).
std::vector<std::pair<std::string, RunConfig>> ablation_variants(const RunConfig& base);

/// Trains each variant for each seed from identical data and reports the final
/// full-dataset loss.
std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<TrainingSample>& dataset,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::function<void(const AblationRow&)>& on_row = {});
void write_ablation_csv(const fs::path& path, const std::vector<AblationRow>& rows);

/// Mean PU-PSNR of the network's H against H*t over the dataset.
double dataset_pu_psnr(const HisnNetwork<float>& net, const std::vector<TrainingSample>& dataset,
                       const TrainConfig& cfg);

struct GradcheckRow
{
  std::string name;
  double rel_error = 0.0;
  std::size_t coordinates = 0;
  bool pass = false;
};

inline constexpr double kGradcheckTolerance = 1e-4;

/// Reverse-mode vs central differences in double precision for every graph
/// primitive, modulate, log_map and the full toy loss of each variant.
std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed = 0,
                                        const std::function<void(const GradcheckRow&)>& on_row = {});

/// Exposure stack PNGs plus a Drago tone-mapped PNG of the input.
std::vector<fs::path> run_preview(const fs::path& hdr_path, const fs::path& out_dir,
                                  const std::vector<double>& exposures, const std::string& crf_source);

struct DumpSummary
{
  std::size_t grayscale = 0;
  std::size_t products = 0;
  std::vector<std::string> notes;
};

/// Writes every gamma_i / beta_i channel as min-max normalized grayscale PNG and
/// gamma_i^c * L as RGB PNG. Constant maps are written as zeros and listed in
/// notes.txt.
DumpSummary dump_activations(const HisnNetwork<float>& net, const LdrImage& ldr, const fs::path& out_dir,
                             double tau = kDefaultTau, MaskVariant variant = MaskVariant::Default);

} // namespace itm
