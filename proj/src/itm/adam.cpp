// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/adam.hpp"

#include <cmath>

namespace itm {

template <typename T>
AdamState<T> make_adam_state(const ParameterSet<T>& params, AdamHyperparams hyper)
{
  AdamState<T> state;
  state.hyper = hyper;
  for (const auto& p : params) {
    state.m.emplace_back(p.value.shape());
    state.v.emplace_back(p.value.shape());
  }
  return state;
}

template <typename T>
void adam_step(ParameterSet<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state, double lr)
{
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw RuntimeError("adam: expected " + std::to_string(params.size()) + " gradients, got " +
                       std::to_string(grads.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].value.shape())
      throw RuntimeError("adam: gradient shape " + grads[i].shape().str() + " does not match parameter '" +
                         params[i].name + "' " + params[i].value.shape().str());
    for (T g : grads[i].data())
      if (!std::isfinite(g))
        throw RuntimeError("adam: non-finite gradient in parameter '" + params[i].name + "'");
  }

  const auto& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    auto g = grads[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      const double mj = h.beta1 * m[j] + (1.0 - h.beta1) * gj;
      const double vj = h.beta2 * v[j] + (1.0 - h.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + h.epsilon);
      w[j] = static_cast<T>(w[j] - update);
    }
  }
}

template AdamState<float> make_adam_state(const ParameterSet<float>&, AdamHyperparams);
template AdamState<double> make_adam_state(const ParameterSet<double>&, AdamHyperparams);
template void adam_step(ParameterSet<float>&, const std::vector<Tensor<float>>&, AdamState<float>&, double);
template void adam_step(ParameterSet<double>&, const std::vector<Tensor<double>>&, AdamState<double>&, double);

} // namespace itm
