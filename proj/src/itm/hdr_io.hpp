// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "itm/image.hpp"

namespace itm {

/// Shared-exponent pixel: mantissas r,g,b and exponent e (bias 128).
struct RgbePixel
{
  std::uint8_t r = 0, g = 0, b = 0, e = 0;
  friend bool operator==(const RgbePixel&, const RgbePixel&) = default;
};

/// Rounds to nearest, so each channel is within max(r,g,b)/256 of the input.
RgbePixel rgbe_encode(double r, double g, double b);
std::array<double, 3> rgbe_decode(const RgbePixel& p);

/// Radiance .hdr, "-Y h +X w" orientation. Scanlines are written with the
/// new-style run-length encoding when the width allows it.
std::vector<std::uint8_t> encode_hdr(const HdrImage& img);
HdrImage decode_hdr(std::span<const std::uint8_t> bytes);
void write_hdr(const std::filesystem::path& path, const HdrImage& img);
HdrImage read_hdr(const std::filesystem::path& path);

/// Portable float map. Written little-endian (negative scale), rows bottom-up.
std::vector<std::uint8_t> encode_pfm(const HdrImage& img);
HdrImage decode_pfm(std::span<const std::uint8_t> bytes);
void write_pfm(const std::filesystem::path& path, const HdrImage& img);
HdrImage read_pfm(const std::filesystem::path& path);

/// Dispatches on extension: .hdr / .pfm.
HdrImage read_hdr_image(const std::filesystem::path& path);
void write_hdr_image(const std::filesystem::path& path, const HdrImage& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace itm
