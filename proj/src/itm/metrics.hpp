// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "itm/image.hpp"

namespace itm {

inline constexpr double kPuMinLuminance = 0.005;   // cd/m^2
inline constexpr double kPuMaxLuminance = 1e4;     // cd/m^2
inline constexpr double kAnchorLuminance = 1000.0; // cd/m^2
inline constexpr double kAnchorPercentile = 99.9;
inline constexpr double kPsnrCapDb = 99.0;

/// Perceptually uniform response on [kPuMinLuminance, kPuMaxLuminance]: the
/// integral of 1/tvi(L) with the photopic threshold-versus-intensity function,
/// tabulated on a log-luminance grid and normalized so the clamp bounds map to
/// 0 and 1. Inputs outside the range are clamped.
double pu_curve(double luminance);

struct PuAnchor
{
  double scale = 1.0;             // cd/m^2 per radiance unit
  double reference_value = 0.0;   // the anchor's percentile value before scaling
  double peak_luminance = kAnchorLuminance;
};

/// Nearest-rank percentile over every sample of the image.
double percentile(const PlanarImage& img, double pct);

/// scale = 1000 / p99.9(anchor). Throws InputError for an all-zero anchor.
PuAnchor make_anchor(const HdrImage& anchor);

class PuImage : public PlanarImage
{
public:
  using PlanarImage::PlanarImage;
  PuAnchor anchor;
};

PuImage pu_encode(const HdrImage& h, const PuAnchor& anchor);
PuImage pu_encode(const HdrImage& h, const HdrImage& anchor);

/// 10*log10(1/MSE) for unit-range images, capped at 99 dB.
double psnr(const PlanarImage& a, const PlanarImage& b);

struct SsimParams
{
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over the valid window positions, averaged across channels.
double ssim(const PlanarImage& a, const PlanarImage& b, const SsimParams& p = {});

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Number of scales used for an image whose smaller side is `min_dim`.
std::size_t ms_ssim_scales(std::size_t min_dim, const SsimParams& p = {});

/// Multi-scale SSIM with 2x2 average downsampling between scales. Images too
/// small for five scales use fewer, with the leading weights renormalized.
double ms_ssim(const PlanarImage& a, const PlanarImage& b, const SsimParams& p = {});

struct MetricRow
{
  std::string filename;
  double pu_psnr_db = 0.0;
  double pu_ssim = 0.0;
  double pu_ms_ssim = 0.0;
};

struct MetricReport
{
  std::vector<MetricRow> rows;
  MetricRow mean;
  std::vector<std::string> missing;  // files present in only one directory
  nlohmann::json echo;
};

/// Scores one prediction against its reference after joint PU encoding.
MetricRow score_pair(const HdrImage& pred, const HdrImage& ref, const std::string& name = {});

/// Pairs .hdr/.pfm files by stem, scores every pair, writes `out_csv`
/// (filename, pu_psnr_db, pu_ssim, pu_ms_ssim, then a mean row) and a JSON
/// sidecar next to it. Unpaired files are reported and skipped; an empty
/// intersection is an InputError and nothing is written.
MetricReport evaluate(const std::filesystem::path& pred_dir, const std::filesystem::path& ref_dir,
                      const std::filesystem::path& out_csv);

void write_metric_csv(const std::filesystem::path& path, const MetricReport& report);

} // namespace itm
