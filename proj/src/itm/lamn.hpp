// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "itm/graph.hpp"
#include "itm/image.hpp"
#include "itm/parameters.hpp"

namespace itm {

inline constexpr double kDefaultTau = 0.95;

/// Saturation mask: lightness = max over RGB, M = max(0, lightness - tau) / (1 - tau).
Mask compute_mask(const LdrImage& l, double tau = kDefaultTau);

/// Indices of one convolution's weight and bias inside a ParameterSet.
struct ConvSlot
{
  std::size_t weight = 0;
  std::size_t bias = 0;
  ConvParams conv = k3s1p1d1;
};

/// Adds a He-initialized (Cout, Cin, k, k) weight and a zero bias.
template <typename T>
ConvSlot add_conv(ParameterSet<T>& params, const std::string& name, std::size_t in_c, std::size_t out_c,
                  const ConvParams& conv, std::mt19937_64& rng);

/// Layout of the two modulation chains: gamma[i], beta[i] for stage i = 0..n-1.
/// Stage 0 lifts the 1-channel mask to `channels`.
struct LamnLayout
{
  std::size_t channels = 0;
  std::vector<ConvSlot> gamma;
  std::vector<ConvSlot> beta;

  std::size_t stages() const { return gamma.size(); }
};

template <typename T>
LamnLayout build_lamn(ParameterSet<T>& params, std::size_t stages, std::size_t channels, std::mt19937_64& rng);

struct Modulation
{
  NodeId gamma;
  NodeId beta;
};

/// gamma_1 = ReLU(Conv(M)), gamma_i = ReLU(Conv(gamma_{i-1})); the beta chain
/// has the same structure with its own weights.
template <typename T>
std::vector<Modulation> lamn_forward(Graph<T>& g, std::span<const NodeId> bound, const LamnLayout& layout,
                                     NodeId mask);

/// x * (1 + gamma) + beta. `stage` (1-based) names the offending stage on a
/// shape mismatch.
template <typename T>
NodeId modulate(Graph<T>& g, NodeId x, NodeId gamma, NodeId beta, std::size_t stage = 0);

} // namespace itm
