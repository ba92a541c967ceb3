// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace itm {

void NoiseParams::validate() const
{
  if (!(sigma_s >= 0.0 && sigma_s <= kMaxSigmaS))
    throw ConfigError("sigma_s " + std::to_string(sigma_s) + " outside [0, 0.013]");
  if (!(sigma_c >= 0.0 && sigma_c <= kMaxSigmaC))
    throw ConfigError("sigma_c " + std::to_string(sigma_c) + " outside [0, 0.005]");
}

void PipelineConfig::validate() const
{
  for (double t : exposures)
    if (!(t > 0.0))
      throw ConfigError("exposure values must be > 0");
  if (exposures.empty() && exposure_count < 2)
    throw ConfigError("exposure_count must be >= 2");
  if (!(exposure_lo_log2 <= exposure_hi_log2))
    throw ConfigError("exposure range lo must not exceed hi");
  if (!(sigma_s_max >= 0.0 && sigma_s_max <= kMaxSigmaS) || !(sigma_c_max >= 0.0 && sigma_c_max <= kMaxSigmaC))
    throw ConfigError("noise ranges must lie within [0, 0.013] x [0, 0.005]");
  if (jpeg_quality_min < kMinJpegQuality || jpeg_quality_max > kMaxJpegQuality || jpeg_quality_min > jpeg_quality_max)
    throw ConfigError("jpeg quality range must lie within [85, 100]");
  if (crf_split != "all" && crf_split != "train" && crf_split != "test")
    throw ConfigError("crf_split must be one of all|train|test");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
  // splitmix64 over the pair
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

HdrImage scale_exposure(const HdrImage& h, double t)
{
  if (!(t > 0.0))
    throw InputError("exposure must be > 0");
  HdrImage out = h;
  for (double& v : out.data())
    v *= t;
  return out;
}

LdrImage clip_dynamic_range(const HdrImage& h)
{
  h.validate();
  LdrImage out(h.width(), h.height());
  auto src = h.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = std::min(src[i], 1.0);
  return out;
}

HdrImage clipped_residual(const HdrImage& h)
{
  h.validate();
  HdrImage out(h.width(), h.height());
  auto src = h.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = src[i] - std::min(src[i], 1.0);
  return out;
}

LdrImage apply_crf(const LdrImage& in, const ResponseCurve& f)
{
  LdrImage out(in.width(), in.height());
  auto src = in.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!(src[i] >= 0.0 && src[i] <= 1.0))
      throw InputError("apply_crf input " + std::to_string(src[i]) + " outside [0,1]");
    dst[i] = f(src[i]);
  }
  return out;
}

double quantize8(double v)
{
  return std::floor(v * 255.0 + 0.5) / 255.0;
}

LdrImage quantize8(const LdrImage& in)
{
  LdrImage out(in.width(), in.height());
  auto src = in.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = quantize8(src[i]);
  out.quantized = true;
  return out;
}

LdrImage add_noise(const LdrImage& in, const NoiseParams& np)
{
  np.validate();
  LdrImage out = in;
  out.quantized = false;
  if (np.sigma_s == 0.0 && np.sigma_c == 0.0) {
    out.quantized = in.quantized;
    return out;
  }
  std::mt19937_64 rng(np.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double ss2 = np.sigma_s * np.sigma_s;
  const double sc2 = np.sigma_c * np.sigma_c;
  for (double& v : out.data()) {
    const double sd = std::sqrt(std::max(v, 0.0) * ss2 + sc2);
    const double z = normal(rng);
    if (sd > 0.0)
      v = std::clamp(v + sd * z, 0.0, 1.0);
  }
  return out;
}

NoiseParams sample_noise_params(std::mt19937_64& rng, double sigma_s_max, double sigma_c_max)
{
  std::uniform_real_distribution<double> us(0.0, sigma_s_max);
  std::uniform_real_distribution<double> uc(0.0, sigma_c_max);
  NoiseParams np;
  np.sigma_s = us(rng);
  np.sigma_c = uc(rng);
  np.seed = rng();
  return np;
}

std::vector<double> sample_exposures(std::size_t count, double lo_log2, double hi_log2)
{
  if (count < 2)
    throw ConfigError("sample_exposures needs count >= 2");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double e = lo_log2 + (hi_log2 - lo_log2) * static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = std::exp2(e);
  }
  return out;
}

SynthesizedPair synthesize_pair(const HdrImage& h, double t, const ResponseCurve& f,
                                const std::optional<NoiseParams>& noise, std::optional<int> jpeg_quality)
{
  SynthesizedPair p;
  p.exposed = scale_exposure(h, t);
  p.dim_target = clip_dynamic_range(p.exposed);
  p.bright_target = clipped_residual(p.exposed);
  p.crf_target = apply_crf(p.dim_target, f);
  LdrImage l = noise ? add_noise(p.crf_target, *noise) : p.crf_target;
  l = quantize8(l);
  if (jpeg_quality)
    l = jpeg_round_trip(l, *jpeg_quality);
  p.ldr = std::move(l);
  return p;
}

HdrImage naive_expand(const LdrImage& l)
{
  HdrImage out(l.width(), l.height());
  auto src = l.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = src[i] * src[i];
  return out;
}

HdrImage procedural_scene(std::uint64_t seed, std::size_t width, std::size_t height)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double scale = static_cast<double>(std::min(width, height)) / 64.0;
  HdrImage img(width, height);

  double base[3];
  for (double& b : base)
    b = 0.08 + 0.35 * u(rng);

  struct Wave { double fx, fy, phase, amp; };
  Wave waves[3];
  for (auto& w : waves) {
    w.fx = (0.5 + 2.5 * u(rng)) * 2.0 * std::numbers::pi / static_cast<double>(width);
    w.fy = (0.5 + 2.5 * u(rng)) * 2.0 * std::numbers::pi / static_cast<double>(height);
    w.phase = 2.0 * std::numbers::pi * u(rng);
    w.amp = 0.3 * u(rng);
  }

  struct Light { double cx, cy, sigma, peak, tint[3]; };
  std::vector<Light> lights(1 + static_cast<std::size_t>(u(rng) * 3.0));
  for (auto& l : lights) {
    l.cx = (0.15 + 0.7 * u(rng)) * static_cast<double>(width);
    l.cy = (0.15 + 0.7 * u(rng)) * static_cast<double>(height);
    l.sigma = (2.5 + 3.5 * u(rng)) * scale;
    l.peak = 2.0 + 6.0 * u(rng);
    for (double& t : l.tint)
      t = 0.8 + 0.2 * u(rng);
  }

  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double texture = 1.0;
      for (const auto& w : waves)
        texture += w.amp * std::sin(w.fx * static_cast<double>(x) + w.fy * static_cast<double>(y) + w.phase);
      for (std::size_t c = 0; c < 3; ++c) {
        double v = base[c] * std::max(texture, 0.1);
        for (const auto& l : lights) {
          const double dx = static_cast<double>(x) - l.cx, dy = static_cast<double>(y) - l.cy;
          v += l.peak * l.tint[c] * std::exp(-(dx * dx + dy * dy) / (2.0 * l.sigma * l.sigma));
        }
        img.at(c, y, x) = v;
      }
    }
  }
  return img;
}

} // namespace itm
