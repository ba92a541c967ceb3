// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "itm/image.hpp"
#include "itm/response_curve.hpp"

namespace itm {

struct NoiseParams
{
  double sigma_s = 0.0; // signal-dependent, [0, 0.013]
  double sigma_c = 0.0; // constant, [0, 0.005]
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kMaxSigmaS = 0.013;
inline constexpr double kMaxSigmaC = 0.005;
inline constexpr int kMinJpegQuality = 85;
inline constexpr int kMaxJpegQuality = 100;

struct PipelineConfig
{
  std::vector<double> exposures;  // empty: sample `exposure_count` on [lo, hi] in log2
  std::size_t exposure_count = 60;
  double exposure_lo_log2 = -3.0;
  double exposure_hi_log2 = 3.0;
  std::string crf_source = "identity";
  std::string crf_split = "all";  // all | train | test
  double sigma_s_max = kMaxSigmaS;
  double sigma_c_max = kMaxSigmaC;
  bool noise = true;
  bool jpeg = false;
  int jpeg_quality_min = kMinJpegQuality;
  int jpeg_quality_max = kMaxJpegQuality;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Derives an independent RNG seed for item `index` of a run seeded by `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

HdrImage scale_exposure(const HdrImage& h, double t);

/// min(H, 1) per sample.
LdrImage clip_dynamic_range(const HdrImage& h);
/// H - min(H, 1): the part of the radiance lost to clipping.
HdrImage clipped_residual(const HdrImage& h);
LdrImage apply_crf(const LdrImage& in, const ResponseCurve& f);
/// floor(v*255 + 0.5) / 255
double quantize8(double v);
LdrImage quantize8(const LdrImage& in);
/// Heteroscedastic Gaussian noise with variance I*sigma_s^2 + sigma_c^2, clamped to [0,1].
LdrImage add_noise(const LdrImage& in, const NoiseParams& np);
NoiseParams sample_noise_params(std::mt19937_64& rng, double sigma_s_max = kMaxSigmaS,
                                double sigma_c_max = kMaxSigmaC);

bool jpeg_available();
/// Lossy block-DCT encode + decode at `quality`. When the codec is not built in
/// the image passes through unchanged and a warning is logged.
LdrImage jpeg_round_trip(const LdrImage& in, int quality);

/// `count` exposures uniform in log2 space over [lo, hi], in linear units.
std::vector<double> sample_exposures(std::size_t count, double lo_log2, double hi_log2);

struct SynthesizedPair
{
  LdrImage ldr;
  LdrImage dim_target;     // C(H*t)
  HdrImage bright_target;  // H*t - C(H*t)
  LdrImage crf_target;     // F(C(H*t)), before noise and quantization
  HdrImage exposed;        // H*t
};

/// L = jpeg(Q(noise(F(C(H*t))))) with the decomposition targets alongside.
SynthesizedPair synthesize_pair(const HdrImage& h, double t, const ResponseCurve& f,
                                const std::optional<NoiseParams>& noise, std::optional<int> jpeg_quality);

/// Handcrafted x^2 inverse response, used as a naive expansion baseline.
HdrImage naive_expand(const LdrImage& l);

/// Smooth procedural HDR scene: textured background plus a few bright
/// Gaussian light sources well above 1.
HdrImage procedural_scene(std::uint64_t seed, std::size_t width, std::size_t height);

} // namespace itm
