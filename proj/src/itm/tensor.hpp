// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "itm/error.hpp"

namespace itm {

/// Cache-line aligned storage. Vectorized kernels peel loops according to the
/// address, so a fixed alignment keeps results bitwise reproducible.
template <typename T>
struct AlignedAllocator
{
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Tensor extents. Feature maps use N,C,H,W order.
class Shape
{
public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims) : dims_(dims) {}
  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  const std::vector<std::size_t>& dims() const { return dims_; }

  std::size_t numel() const
  {
    std::size_t n = 1;
    for (auto d : dims_)
      n *= d;
    return n;
  }

  // NCHW accessors; only meaningful for rank-4 shapes.
  std::size_t n() const { return dims_.at(0); }
  std::size_t c() const { return dims_.at(1); }
  std::size_t h() const { return dims_.at(2); }
  std::size_t w() const { return dims_.at(3); }

  std::string str() const
  {
    std::string s = "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i)
        s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + ")";
  }

  friend bool operator==(const Shape&, const Shape&) = default;

private:
  std::vector<std::size_t> dims_;
};

/// Dense row-major array of T.
template <typename T>
class Tensor
{
public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
    : shape_(std::move(shape)), data_(shape_.numel(), fill) {}

  Tensor(Shape shape, const std::vector<T>& data)
    : shape_(std::move(shape)), data_(data.begin(), data.end())
  {
    if (data_.size() != shape_.numel())
      throw RuntimeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.str());
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x)
  {
    return data_[((n * shape_.c() + c) * shape_.h() + y) * shape_.w() + x];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const
  {
    return data_[((n * shape_.c() + c) * shape_.h() + y) * shape_.w() + x];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

  template <typename U>
  Tensor<U> cast() const
  {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

private:
  Shape shape_;
  AlignedVector<T> data_;
};

} // namespace itm
