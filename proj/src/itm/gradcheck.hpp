// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "itm/tensor.hpp"

namespace itm {

/// Central finite differences of a scalar function, one coordinate at a time.
/// Independent of the autodiff tape; used as the gradient oracle.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, T eps)
{
  Tensor<T> grad(x.shape());
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T saved = probe[i];
    probe[i] = saved + eps;
    const T up = f(probe);
    probe[i] = saved - eps;
    const T down = f(probe);
    probe[i] = saved;
    grad[i] = (up - down) / (T(2) * eps);
  }
  return grad;
}

/// max_i |a_i - b_i| / max(|a|_inf, |b|_inf, floor)
template <typename T>
double relative_error(const Tensor<T>& a, const Tensor<T>& b, double floor = 1e-8)
{
  if (a.shape() != b.shape())
    throw RuntimeError("relative_error shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  double diff = 0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(double(a[i]) - double(b[i])));
    scale = std::max({scale, std::abs(double(a[i])), std::abs(double(b[i]))});
  }
  return diff / scale;
}

} // namespace itm
