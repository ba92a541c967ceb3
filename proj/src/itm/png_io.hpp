// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "itm/image.hpp"

namespace itm {

/// 8-bit PNG. Channel count 1 writes grayscale, 3 writes RGB. Values are
/// clamped to [0,1] and rounded to the nearest code.
void write_png(const std::filesystem::path& path, const PlanarImage& img);

/// Reads any PNG as 8-bit RGB; the result is on the 8-bit lattice.
LdrImage read_png(const std::filesystem::path& path);

/// PNG or JPEG by extension.
LdrImage read_ldr_image(const std::filesystem::path& path);

} // namespace itm
