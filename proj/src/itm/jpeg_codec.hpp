// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "itm/image.hpp"

namespace itm {

std::vector<std::uint8_t> encode_jpeg(const LdrImage& img, int quality);
LdrImage decode_jpeg(std::span<const std::uint8_t> bytes);

void write_jpeg(const std::filesystem::path& path, const LdrImage& img, int quality);
LdrImage read_jpeg(const std::filesystem::path& path);

} // namespace itm
