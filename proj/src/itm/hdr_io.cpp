// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/hdr_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace itm {

RgbePixel rgbe_encode(double r, double g, double b)
{
  const double v = std::max({r, g, b});
  if (!(v >= 1e-38))
    return {};
  int e = 0;
  std::frexp(v, &e);
  double scale = std::ldexp(1.0, 8 - e);
  auto round = [](double x) { return static_cast<long>(std::floor(x + 0.5)); };
  if (round(v * scale) > 255) {
    e += 1;
    scale *= 0.5;
  }
  if (e + 128 > 255)
    throw InputError("value " + std::to_string(v) + " exceeds the RGBE range");
  if (e + 128 < 1)
    return {};
  auto m = [&](double x) { return static_cast<std::uint8_t>(std::clamp<long>(round(std::max(x, 0.0) * scale), 0, 255)); };
  return {m(r), m(g), m(b), static_cast<std::uint8_t>(e + 128)};
}

std::array<double, 3> rgbe_decode(const RgbePixel& p)
{
  if (p.e == 0)
    return {0.0, 0.0, 0.0};
  const double f = std::ldexp(1.0, static_cast<int>(p.e) - (128 + 8));
  return {p.r * f, p.g * f, p.b * f};
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw RuntimeError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Radiance RGBE

namespace {

class ByteReader
{
public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ >= bytes_.size(); }

  std::uint8_t next(const char* what)
  {
    if (pos_ >= bytes_.size())
      fail(std::string("unexpected end of data reading ") + what);
    return bytes_[pos_++];
  }

  std::string line(const char* what)
  {
    std::string s;
    for (;;) {
      const std::uint8_t c = next(what);
      if (c == '\n')
        return s;
      s.push_back(static_cast<char>(c));
      if (s.size() > 4096)
        fail(std::string("overlong line in ") + what);
    }
  }

  [[noreturn]] void fail(const std::string& msg) const
  {
    throw InputError(msg + " at byte offset " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }
  void skip(std::size_t n) { pos_ += n; }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_rle_channel(std::vector<std::uint8_t>& out, const std::uint8_t* data, std::size_t n)
{
  std::size_t i = 0;
  while (i < n) {
    // find next run of >= 4
    std::size_t run_start = i, run_len = 0;
    while (run_start < n) {
      run_len = 1;
      while (run_start + run_len < n && run_len < 127 && data[run_start + run_len] == data[run_start])
        ++run_len;
      if (run_len >= 4)
        break;
      run_start += run_len;
    }
    if (run_start >= n) {
      run_start = n;
      run_len = 0;
    }
    while (i < run_start) {
      const std::size_t count = std::min<std::size_t>(128, run_start - i);
      out.push_back(static_cast<std::uint8_t>(count));
      out.insert(out.end(), data + i, data + i + count);
      i += count;
    }
    if (run_len >= 4) {
      out.push_back(static_cast<std::uint8_t>(128 + run_len));
      out.push_back(data[run_start]);
      i = run_start + run_len;
    }
  }
}

} // namespace

std::vector<std::uint8_t> encode_hdr(const HdrImage& img)
{
  img.validate();
  const std::size_t w = img.width(), h = img.height();
  std::ostringstream header;
  header << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << h << " +X " << w << "\n";
  const std::string hs = header.str();
  std::vector<std::uint8_t> out(hs.begin(), hs.end());
  const bool rle = w >= 8 && w < 32768;
  std::vector<std::uint8_t> planes(4 * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const RgbePixel p = rgbe_encode(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
      planes[x] = p.r;
      planes[w + x] = p.g;
      planes[2 * w + x] = p.b;
      planes[3 * w + x] = p.e;
    }
    if (rle) {
      out.push_back(2);
      out.push_back(2);
      out.push_back(static_cast<std::uint8_t>(w >> 8));
      out.push_back(static_cast<std::uint8_t>(w & 0xFF));
      for (std::size_t c = 0; c < 4; ++c)
        write_rle_channel(out, planes.data() + c * w, w);
    } else {
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t c = 0; c < 4; ++c)
          out.push_back(planes[c * w + x]);
    }
  }
  return out;
}

HdrImage decode_hdr(std::span<const std::uint8_t> bytes)
{
  ByteReader in(bytes);
  const std::string magic = in.line("header");
  if (magic.rfind("#?", 0) != 0)
    in.fail("missing #? signature");
  bool format_ok = true;
  for (;;) {
    const std::string l = in.line("header");
    if (l.empty())
      break;
    if (l.rfind("FORMAT=", 0) == 0)
      format_ok = l == "FORMAT=32-bit_rle_rgbe";
  }
  if (!format_ok)
    in.fail("unsupported FORMAT (only 32-bit_rle_rgbe)");
  const std::string res = in.line("resolution string");
  std::istringstream rs(res);
  std::string ya, xa;
  long h = 0, w = 0;
  if (!(rs >> ya >> h >> xa >> w) || ya != "-Y" || xa != "+X")
    in.fail("unsupported resolution string '" + res + "' (expected \"-Y h +X w\")");
  if (h <= 0 || w <= 0 || h > 65535 || w > 65535)
    in.fail("invalid image size in '" + res + "'");

  HdrImage img(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
  const std::size_t width = img.width();
  std::vector<std::uint8_t> planes(4 * width);
  for (std::size_t y = 0; y < img.height(); ++y) {
    const std::uint8_t b0 = in.next("scanline");
    const std::uint8_t b1 = in.next("scanline");
    const std::uint8_t b2 = in.next("scanline");
    const std::uint8_t b3 = in.next("scanline");
    if (b0 == 2 && b1 == 2 && (b2 & 0x80) == 0) {
      const std::size_t len = (static_cast<std::size_t>(b2) << 8) | b3;
      if (len != width)
        in.fail("scanline " + std::to_string(y) + " length " + std::to_string(len) + " does not match width " +
                std::to_string(width));
      for (std::size_t c = 0; c < 4; ++c) {
        std::size_t x = 0;
        while (x < width) {
          std::size_t count = in.next("run header");
          if (count > 128) {
            count -= 128;
            if (x + count > width)
              in.fail("run overflows scanline " + std::to_string(y));
            const std::uint8_t v = in.next("run value");
            std::fill_n(planes.data() + c * width + x, count, v);
          } else {
            if (count == 0 || x + count > width)
              in.fail("bad literal count in scanline " + std::to_string(y));
            for (std::size_t i = 0; i < count; ++i)
              planes[c * width + x + i] = in.next("literal");
          }
          x += count;
        }
      }
    } else {
      // flat scanline; the four bytes already read are the first pixel
      planes[0] = b0;
      planes[width] = b1;
      planes[2 * width] = b2;
      planes[3 * width] = b3;
      for (std::size_t x = 1; x < width; ++x)
        for (std::size_t c = 0; c < 4; ++c)
          planes[c * width + x] = in.next("flat scanline");
    }
    for (std::size_t x = 0; x < width; ++x) {
      const auto v = rgbe_decode({planes[x], planes[width + x], planes[2 * width + x], planes[3 * width + x]});
      for (std::size_t c = 0; c < 3; ++c)
        img.at(c, y, x) = v[c];
    }
  }
  return img;
}

void write_hdr(const std::filesystem::path& path, const HdrImage& img)
{
  write_file_bytes(path, encode_hdr(img));
}

HdrImage read_hdr(const std::filesystem::path& path)
{
  try {
    return decode_hdr(read_file_bytes(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// PFM

std::vector<std::uint8_t> encode_pfm(const HdrImage& img)
{
  std::ostringstream header;
  header << "PF\n" << img.width() << " " << img.height() << "\n-1.0\n";
  const std::string hs = header.str();
  std::vector<std::uint8_t> out(hs.begin(), hs.end());
  out.reserve(out.size() + img.pixels() * 12);
  for (std::size_t row = 0; row < img.height(); ++row) {
    const std::size_t y = img.height() - 1 - row;
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(img.at(c, y, x)));
        for (int k = 0; k < 4; ++k)
          out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
      }
  }
  return out;
}

HdrImage decode_pfm(std::span<const std::uint8_t> bytes)
{
  ByteReader in(bytes);
  // header tokens are whitespace separated; the payload follows a single whitespace byte
  auto token = [&](const char* what) {
    std::string t;
    std::uint8_t c = in.next(what);
    while (std::isspace(c))
      c = in.next(what);
    while (!std::isspace(c)) {
      t.push_back(static_cast<char>(c));
      if (t.size() > 64)
        in.fail(std::string("overlong token in ") + what);
      c = in.next(what);
    }
    return t;
  };
  const std::string magic = token("magic");
  std::size_t channels = 0;
  if (magic == "PF")
    channels = 3;
  else if (magic == "Pf")
    channels = 1;
  else
    in.fail("unsupported PFM header '" + magic + "' (expected PF or Pf)");
  long w = 0, h = 0;
  double scale = 0;
  try {
    w = std::stol(token("width"));
    h = std::stol(token("height"));
    scale = std::stod(token("scale"));
  } catch (const std::logic_error&) {
    in.fail("malformed PFM dimensions or scale");
  }
  if (w <= 0 || h <= 0 || scale == 0.0)
    in.fail("invalid PFM dimensions or zero scale");
  const bool little = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
  if (in.rest().size() < count * 4)
    in.fail("truncated PFM payload: need " + std::to_string(count * 4) + " bytes, have " +
            std::to_string(in.rest().size()));
  const std::uint8_t* p = in.rest().data();
  HdrImage img(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
  std::size_t k = 0;
  for (std::size_t row = 0; row < img.height(); ++row) {
    const std::size_t y = img.height() - 1 - row;
    for (std::size_t x = 0; x < img.width(); ++x) {
      for (std::size_t c = 0; c < channels; ++c, ++k) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
          const std::uint32_t byte = p[k * 4 + static_cast<std::size_t>(b)];
          bits |= little ? byte << (8 * b) : byte << (8 * (3 - b));
        }
        const double v = std::bit_cast<float>(bits);
        if (channels == 1)
          for (std::size_t cc = 0; cc < 3; ++cc)
            img.at(cc, y, x) = v;
        else
          img.at(c, y, x) = v;
      }
    }
  }
  return img;
}

void write_pfm(const std::filesystem::path& path, const HdrImage& img)
{
  write_file_bytes(path, encode_pfm(img));
}

HdrImage read_pfm(const std::filesystem::path& path)
{
  try {
    return decode_pfm(read_file_bytes(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

HdrImage read_hdr_image(const std::filesystem::path& path)
{
  const std::string ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM")
    return read_pfm(path);
  if (ext == ".hdr" || ext == ".HDR" || ext == ".rgbe" || ext == ".pic")
    return read_hdr(path);
  throw InputError("unsupported HDR extension '" + ext + "' for " + path.string());
}

void write_hdr_image(const std::filesystem::path& path, const HdrImage& img)
{
  const std::string ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM")
    write_pfm(path, img);
  else if (ext == ".hdr" || ext == ".HDR")
    write_hdr(path, img);
  else
    throw InputError("unsupported HDR extension '" + ext + "' for " + path.string());
}

} // namespace itm
