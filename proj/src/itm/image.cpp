// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/image.hpp"

#include <algorithm>
#include <cmath>

namespace itm {

double PlanarImage::max_value() const
{
  double m = 0.0;
  for (double v : data_)
    m = std::max(m, v);
  return m;
}

namespace {

std::string locate(const PlanarImage& img, std::size_t i)
{
  const std::size_t c = i / img.pixels();
  const std::size_t p = i % img.pixels();
  return "channel " + std::to_string(c) + " pixel (" + std::to_string(p % img.width()) + "," +
         std::to_string(p / img.width()) + ")";
}

} // namespace

void HdrImage::validate() const
{
  if (channels() != 3)
    throw InputError("HDR image must have 3 channels, has " + std::to_string(channels()));
  auto d = data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]))
      throw InputError("HDR image has a non-finite value at " + locate(*this, i));
    if (d[i] < 0.0)
      throw InputError("HDR image has a negative value " + std::to_string(d[i]) + " at " + locate(*this, i));
  }
}

void LdrImage::validate() const
{
  if (channels() != 3)
    throw InputError("LDR image must have 3 channels, has " + std::to_string(channels()));
  auto d = data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] >= 0.0 && d[i] <= 1.0))
      throw InputError("LDR value " + std::to_string(d[i]) + " outside [0,1] at " + locate(*this, i));
    if (quantized) {
      const double k = d[i] * 255.0;
      if (std::abs(k - std::round(k)) > 1e-9)
        throw InputError("LDR value off the 8-bit lattice at " + locate(*this, i));
    }
  }
}

} // namespace itm
