// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/lamn.hpp"

#include <algorithm>
#include <cmath>

namespace itm {

Mask compute_mask(const LdrImage& l, double tau)
{
  if (!(tau > 0.0 && tau < 1.0))
    throw ConfigError("mask threshold tau must lie in (0,1), got " + std::to_string(tau));
  if (l.channels() != 3)
    throw InputError("compute_mask expects a 3-channel image");
  Mask m(l.width(), l.height());
  m.tau = tau;
  for (std::size_t y = 0; y < l.height(); ++y)
    for (std::size_t x = 0; x < l.width(); ++x) {
      const double lightness = std::max({l.at(0, y, x), l.at(1, y, x), l.at(2, y, x)});
      m.at(0, y, x) = std::max(0.0, lightness - tau) / (1.0 - tau);
    }
  return m;
}

template <typename T>
ConvSlot add_conv(ParameterSet<T>& params, const std::string& name, std::size_t in_c, std::size_t out_c,
                  const ConvParams& conv, std::mt19937_64& rng)
{
  const std::size_t k = static_cast<std::size_t>(conv.kernel);
  const double fan_in = static_cast<double>(in_c * k * k);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  Tensor<T> w(Shape{out_c, in_c, k, k});
  for (auto& v : w.data())
    v = static_cast<T>(normal(rng));
  ConvSlot slot;
  slot.conv = conv;
  slot.weight = params.add(name + ".weight", std::move(w));
  slot.bias = params.add(name + ".bias", Tensor<T>(Shape{out_c}));
  return slot;
}

template <typename T>
LamnLayout build_lamn(ParameterSet<T>& params, std::size_t stages, std::size_t channels, std::mt19937_64& rng)
{
  if (stages < 1)
    throw ConfigError("LAMN needs at least one stage");
  LamnLayout layout;
  layout.channels = channels;
  for (std::size_t i = 0; i < stages; ++i) {
    const std::size_t in_c = i == 0 ? 1 : channels;
    layout.gamma.push_back(add_conv(params, "lamn.gamma." + std::to_string(i), in_c, channels, k3s1p1d1, rng));
    layout.beta.push_back(add_conv(params, "lamn.beta." + std::to_string(i), in_c, channels, k3s1p1d1, rng));
  }
  return layout;
}

template <typename T>
std::vector<Modulation> lamn_forward(Graph<T>& g, std::span<const NodeId> bound, const LamnLayout& layout,
                                     NodeId mask)
{
  const Shape& ms = g.value(mask).shape();
  if (ms.rank() != 4 || ms.c() != 1)
    throw RuntimeError("LAMN mask must be (N,1,H,W), got " + ms.str());
  auto conv = [&](NodeId x, const ConvSlot& s) {
    return g.relu(g.conv2d(x, bound[s.weight], bound[s.bias], s.conv));
  };
  std::vector<Modulation> out;
  NodeId gamma = mask, beta = mask;
  for (std::size_t i = 0; i < layout.stages(); ++i) {
    gamma = conv(gamma, layout.gamma[i]);
    beta = conv(beta, layout.beta[i]);
    out.push_back({gamma, beta});
  }
  return out;
}

template <typename T>
NodeId modulate(Graph<T>& g, NodeId x, NodeId gamma, NodeId beta, std::size_t stage)
{
  const Shape& xs = g.value(x).shape();
  const Shape& gs = g.value(gamma).shape();
  const Shape& bs = g.value(beta).shape();
  if (xs != gs || xs != bs)
    throw RuntimeError("modulation stage " + std::to_string(stage) + ": activation " + xs.str() + ", gamma " +
                       gs.str() + ", beta " + bs.str() + " must share one shape");
  return g.add(g.add(x, g.mul(x, gamma)), beta);
}

template ConvSlot add_conv(ParameterSet<float>&, const std::string&, std::size_t, std::size_t, const ConvParams&,
                           std::mt19937_64&);
template ConvSlot add_conv(ParameterSet<double>&, const std::string&, std::size_t, std::size_t, const ConvParams&,
                           std::mt19937_64&);
template LamnLayout build_lamn(ParameterSet<float>&, std::size_t, std::size_t, std::mt19937_64&);
template LamnLayout build_lamn(ParameterSet<double>&, std::size_t, std::size_t, std::mt19937_64&);
template std::vector<Modulation> lamn_forward(Graph<float>&, std::span<const NodeId>, const LamnLayout&, NodeId);
template std::vector<Modulation> lamn_forward(Graph<double>&, std::span<const NodeId>, const LamnLayout&, NodeId);
template NodeId modulate(Graph<float>&, NodeId, NodeId, NodeId, std::size_t);
template NodeId modulate(Graph<double>&, NodeId, NodeId, NodeId, std::size_t);

} // namespace itm
