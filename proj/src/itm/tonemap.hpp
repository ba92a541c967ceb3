// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "itm/image.hpp"
#include "itm/response_curve.hpp"

namespace itm {

/// Drago adaptive logarithmic mapping on luminance; colour ratios are kept and
/// the result is clamped to [0,1]. The brightest pixel's luminance maps to 1.
LdrImage drago_tonemap(const HdrImage& h, double bias = 0.85);

inline const std::vector<double> kPreviewExposures = {0.01, 0.1, 1.0, 4.0, 8.0};

/// Renders Q(F(C(H*t))) for every exposure and writes one PNG per exposure.
/// Returns the rendered images in exposure order.
std::vector<LdrImage> exposure_stack_preview(const HdrImage& h, const std::vector<double>& exposures,
                                             const ResponseCurve& f, const std::filesystem::path& out_dir);

} // namespace itm
