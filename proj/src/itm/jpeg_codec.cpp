// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/jpeg_codec.hpp"

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>

#include "itm/logging.hpp"
#include "itm/pipeline.hpp"

#ifdef ITM_HAVE_JPEG
#include <jpeglib.h>
#endif

namespace itm {

#ifdef ITM_HAVE_JPEG
namespace {

struct ErrorManager
{
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_error(j_common_ptr cinfo)
{
  auto* err = reinterpret_cast<ErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

std::vector<std::uint8_t> interleave(const LdrImage& img)
{
  std::vector<std::uint8_t> rgb(img.pixels() * 3);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c)
        rgb[(y * img.width() + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(std::clamp(img.at(c, y, x), 0.0, 1.0) * 255.0));
  return rgb;
}

} // namespace

bool jpeg_available()
{
  return true;
}

std::vector<std::uint8_t> encode_jpeg(const LdrImage& img, int quality)
{
  jpeg_compress_struct cinfo{};
  ErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = on_error;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  std::vector<std::uint8_t> rgb = interleave(img);
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw RuntimeError(std::string("jpeg encode failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width() * 3;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

LdrImage decode_jpeg(std::span<const std::uint8_t> bytes)
{
  jpeg_decompress_struct cinfo{};
  ErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = on_error;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw InputError(std::string("jpeg decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const std::size_t w = cinfo.output_width, h = cinfo.output_height;
  std::vector<std::uint8_t> rgb(w * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  LdrImage out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        out.at(c, y, x) = rgb[(y * w + x) * 3 + c] / 255.0;
  out.quantized = true;
  return out;
}

LdrImage jpeg_round_trip(const LdrImage& in, int quality)
{
  if (quality < kMinJpegQuality || quality > kMaxJpegQuality)
    throw ConfigError("jpeg quality " + std::to_string(quality) + " outside [85, 100]");
  return decode_jpeg(encode_jpeg(in, quality));
}

#else

bool jpeg_available()
{
  return false;
}

std::vector<std::uint8_t> encode_jpeg(const LdrImage&, int)
{
  throw RuntimeError("built without JPEG support");
}

LdrImage decode_jpeg(std::span<const std::uint8_t>)
{
  throw RuntimeError("built without JPEG support");
}

LdrImage jpeg_round_trip(const LdrImage& in, int quality)
{
  if (quality < kMinJpegQuality || quality > kMaxJpegQuality)
    throw ConfigError("jpeg quality " + std::to_string(quality) + " outside [85, 100]");
  log::warn("JPEG codec unavailable, compression stage passes through");
  return in;
}

#endif

void write_jpeg(const std::filesystem::path& path, const LdrImage& img, int quality)
{
  const auto bytes = encode_jpeg(img, quality);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LdrImage read_jpeg(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_jpeg(bytes);
}

} // namespace itm
