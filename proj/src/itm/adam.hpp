// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "itm/parameters.hpp"

namespace itm {

struct AdamHyperparams
{
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for every tensor of a ParameterSet.
template <typename T>
struct AdamState
{
  AdamHyperparams hyper;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ParameterSet<T>& params, AdamHyperparams hyper = {});

/// One bias-corrected ADAM update. Rejects non-finite gradients before touching
/// any parameter, so a failed step leaves params and state unchanged.
template <typename T>
void adam_step(ParameterSet<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state, double lr);

extern template AdamState<float> make_adam_state(const ParameterSet<float>&, AdamHyperparams);
extern template AdamState<double> make_adam_state(const ParameterSet<double>&, AdamHyperparams);
extern template void adam_step(ParameterSet<float>&, const std::vector<Tensor<float>>&, AdamState<float>&, double);
extern template void adam_step(ParameterSet<double>&, const std::vector<Tensor<double>>&, AdamState<double>&, double);

} // namespace itm
