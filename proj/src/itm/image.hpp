// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "itm/error.hpp"
#include "itm/tensor.hpp"

namespace itm {

/// Planar (channel-major) image with double samples.
class PlanarImage
{
public:
  PlanarImage() = default;
  PlanarImage(std::size_t width, std::size_t height, std::size_t channels = 3, double fill = 0.0)
    : width_(width), height_(height), channels_(channels), data_(width * height * channels, fill) {}

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  std::size_t pixels() const { return width_ * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data_[(c * height_ + y) * width_ + x]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> plane(std::size_t c) { return std::span<double>(data_).subspan(c * pixels(), pixels()); }
  std::span<const double> plane(std::size_t c) const
  {
    return std::span<const double>(data_).subspan(c * pixels(), pixels());
  }

  bool same_geometry(const PlanarImage& o) const
  {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  double max_value() const;

  friend bool operator==(const PlanarImage&, const PlanarImage&) = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 3;
  std::vector<double> data_;
};

/// Linear-light radiance, three channels, nonnegative and finite.
class HdrImage : public PlanarImage
{
public:
  using PlanarImage::PlanarImage;
  HdrImage(std::size_t width, std::size_t height, double fill = 0.0) : PlanarImage(width, height, 3, fill) {}

  /// Throws InputError naming the first offending sample.
  void validate() const;
};

/// Display-referred values in [0,1]. `quantized` asserts every value is on the
/// 8-bit lattice {0, 1/255, ..., 1}.
class LdrImage : public PlanarImage
{
public:
  using PlanarImage::PlanarImage;
  LdrImage(std::size_t width, std::size_t height, double fill = 0.0) : PlanarImage(width, height, 3, fill) {}

  bool quantized = false;

  void validate() const;
};

/// Single-channel saturation mask in [0,1].
class Mask : public PlanarImage
{
public:
  Mask() = default;
  Mask(std::size_t width, std::size_t height, double fill = 0.0) : PlanarImage(width, height, 1, fill) {}

  double tau = 0.95;
};

/// Crops a window; the result has the same channel count.
template <typename Image>
Image crop(const Image& src, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height)
{
  if (x0 + width > src.width() || y0 + height > src.height())
    throw InputError("crop window exceeds image bounds");
  Image out = src;
  static_cast<PlanarImage&>(out) = PlanarImage(width, height, src.channels());
  for (std::size_t c = 0; c < src.channels(); ++c)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        out.at(c, y, x) = src.at(c, y0 + y, x0 + x);
  return out;
}

/// Packs images (all the same geometry) into an NCHW tensor.
template <typename T, typename Image>
Tensor<T> to_tensor(std::span<const Image> images)
{
  if (images.empty())
    throw RuntimeError("to_tensor: empty batch");
  const auto& first = images.front();
  Tensor<T> out(Shape{images.size(), first.channels(), first.height(), first.width()});
  std::size_t offset = 0;
  for (const auto& img : images) {
    if (!img.same_geometry(first))
      throw InputError("to_tensor: batch images differ in geometry");
    for (double v : img.data())
      out[offset++] = static_cast<T>(v);
  }
  return out;
}

template <typename T, typename Image>
Tensor<T> to_tensor(const Image& image)
{
  return to_tensor<T, Image>(std::span<const Image>(&image, 1));
}

/// Extracts batch element `n` of an NCHW tensor as an image.
template <typename Image, typename T>
Image from_tensor(const Tensor<T>& t, std::size_t n = 0)
{
  const Shape& s = t.shape();
  if (s.rank() != 4 || n >= s.n())
    throw RuntimeError("from_tensor: bad shape " + s.str());
  Image out;
  static_cast<PlanarImage&>(out) = PlanarImage(s.w(), s.h(), s.c());
  const std::size_t block = s.c() * s.h() * s.w();
  auto dst = out.data();
  for (std::size_t i = 0; i < block; ++i)
    dst[i] = static_cast<double>(t[n * block + i]);
  return out;
}

} // namespace itm
