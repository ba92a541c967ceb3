// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/tonemap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "itm/pipeline.hpp"
#include "itm/png_io.hpp"

namespace itm {

namespace {

double luminance(const HdrImage& h, std::size_t y, std::size_t x)
{
  return 0.2126 * h.at(0, y, x) + 0.7152 * h.at(1, y, x) + 0.0722 * h.at(2, y, x);
}

} // namespace

LdrImage drago_tonemap(const HdrImage& h, double bias)
{
  if (!(bias > 0.0 && bias < 1.0))
    throw ConfigError("drago bias must lie in (0,1)");
  h.validate();
  LdrImage out(h.width(), h.height());

  double max_lum = 0.0, log_sum = 0.0;
  for (std::size_t y = 0; y < h.height(); ++y)
    for (std::size_t x = 0; x < h.width(); ++x) {
      const double l = luminance(h, y, x);
      max_lum = std::max(max_lum, l);
      log_sum += std::log(1e-6 + l);
    }
  if (max_lum <= 0.0)
    return out;

  // world adaptation luminance (log average)
  const double avg_lum = std::exp(log_sum / static_cast<double>(h.pixels()));
  const double max_scaled = max_lum / avg_lum;
  const double divider = std::log10(max_scaled + 1.0);
  const double bias_power = std::log(bias) / std::log(0.5);

  for (std::size_t y = 0; y < h.height(); ++y)
    for (std::size_t x = 0; x < h.width(); ++x) {
      const double lw = luminance(h, y, x);
      if (lw <= 0.0)
        continue;
      const double scaled = lw / avg_lum;
      const double interpol = std::log(2.0 + std::pow(scaled / max_scaled, bias_power) * 8.0);
      const double ld = (std::log(scaled + 1.0) / interpol) / divider;
      for (std::size_t c = 0; c < 3; ++c)
        out.at(c, y, x) = std::clamp(h.at(c, y, x) / lw * ld, 0.0, 1.0);
    }
  return out;
}

std::vector<LdrImage> exposure_stack_preview(const HdrImage& h, const std::vector<double>& exposures,
                                             const ResponseCurve& f, const std::filesystem::path& out_dir)
{
  if (!out_dir.empty())
    std::filesystem::create_directories(out_dir);
  std::vector<LdrImage> stack;
  for (std::size_t i = 0; i < exposures.size(); ++i) {
    const double t = exposures[i];
    if (!(t > 0.0))
      throw InputError("preview exposures must be > 0");
    LdrImage ldr = quantize8(apply_crf(clip_dynamic_range(scale_exposure(h, t)), f));
    if (!out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "exposure_%02zu_t%g.png", i, t);
      write_png(out_dir / name, ldr);
    }
    stack.push_back(std::move(ldr));
  }
  return stack;
}

} // namespace itm
