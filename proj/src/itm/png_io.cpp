// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <png.h>

#include "itm/jpeg_codec.hpp"

namespace itm {

void write_png(const std::filesystem::path& path, const PlanarImage& img)
{
  if (img.channels() != 1 && img.channels() != 3)
    throw RuntimeError("write_png supports 1 or 3 channels, got " + std::to_string(img.channels()));
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width());
  desc.height = static_cast<png_uint_32>(img.height());
  desc.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const std::size_t ch = img.channels();
  std::vector<std::uint8_t> buf(img.pixels() * ch);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < ch; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        buf[(y * img.width() + x) * ch + c] = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
      }
  if (!png_image_write_to_file(&desc, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    const std::string msg = desc.message;
    png_image_free(&desc);
    throw InputError("cannot write PNG " + path.string() + ": " + msg);
  }
}

LdrImage read_png(const std::filesystem::path& path)
{
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&desc, path.string().c_str()))
    throw InputError("cannot read PNG " + path.string() + ": " + desc.message);
  desc.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = desc.message;
    png_image_free(&desc);
    throw InputError("cannot decode PNG " + path.string() + ": " + msg);
  }
  LdrImage img(desc.width, desc.height);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c)
        img.at(c, y, x) = buf[(y * img.width() + x) * 3 + c] / 255.0;
  img.quantized = true;
  return img;
}

LdrImage read_ldr_image(const std::filesystem::path& path)
{
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png")
    return read_png(path);
  if (ext == ".jpg" || ext == ".jpeg")
    return read_jpeg(path);
  throw InputError("unsupported LDR extension '" + ext + "' for " + path.string());
}

} // namespace itm
