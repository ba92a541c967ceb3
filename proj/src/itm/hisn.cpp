// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/hisn.hpp"

namespace itm {

std::string to_string(Variant v)
{
  switch (v) {
  case Variant::Default:
    return "default";
  case Variant::ConfigA:
    return "configA";
  case Variant::ConfigB:
    return "configB";
  }
  return "default";
}

Variant parse_variant(const std::string& s)
{
  if (s == "default")
    return Variant::Default;
  if (s == "configA" || s == "A")
    return Variant::ConfigA;
  if (s == "configB" || s == "B")
    return Variant::ConfigB;
  throw ConfigError("unknown network variant '" + s + "' (expected default|configA|configB)");
}

bool admissible_global_size(std::size_t size)
{
  if (size < 4 || size % 4 != 0)
    return false;
  const std::size_t q = size / 4;
  return (q & (q - 1)) == 0;
}

std::string admissible_sizes_hint(std::size_t near)
{
  std::string s;
  for (std::size_t v = 4; v <= std::max<std::size_t>(near * 2, 64) && v <= 8192; v *= 2) {
    if (!s.empty())
      s += ", ";
    s += std::to_string(v);
  }
  return s + ", ... (4 * 2^k)";
}

HisnConfig HisnConfig::toy()
{
  HisnConfig c;
  c.width = 16;
  c.global_size = 64;
  return c;
}

void HisnConfig::validate() const
{
  if (width < 1)
    throw ConfigError("network width must be >= 1");
  if (fusion_blocks < 1)
    throw ConfigError("fusion_blocks (m) must be >= 1");
  if (modulated_blocks < 1)
    throw ConfigError("modulated_blocks (n) must be >= 1");
  if (local_layers < 1 || dilation_layers < 1)
    throw ConfigError("branch layer counts must be >= 1");
  if (!admissible_global_size(global_size))
    throw ConfigError("global_size " + std::to_string(global_size) +
                      " cannot be reduced to 1x1; admissible sizes: " + admissible_sizes_hint(global_size));
}

std::size_t HisnConfig::global_reductions() const
{
  std::size_t k = 0;
  for (std::size_t s = global_size; s > 4; s /= 2)
    ++k;
  return k;
}

template <typename T>
HisnNetwork<T>::HisnNetwork(HisnConfig cfg) : cfg_(std::move(cfg))
{
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  const std::size_t c = cfg_.width;
  auto name = [](const char* base, std::size_t i) { return std::string(base) + "." + std::to_string(i); };

  for (std::size_t i = 0; i < cfg_.local_layers; ++i)
    layout_.local.push_back(add_conv(params_, name("local", i), i == 0 ? 3 : c, c, k3s1p1d1, rng));
  for (std::size_t i = 0; i < cfg_.dilation_layers; ++i)
    layout_.dilation.push_back(add_conv(params_, name("dilation", i), i == 0 ? 3 : c, c, k3s1p2d2, rng));
  const std::size_t reductions = cfg_.global_reductions();
  for (std::size_t i = 0; i < reductions; ++i)
    layout_.global.push_back(add_conv(params_, name("global", i), i == 0 ? 3 : c, c, k3s2p1d1, rng));
  layout_.global.push_back(add_conv(params_, name("global", reductions), reductions == 0 ? 3 : c, c, k4s1p0d1, rng));
  for (std::size_t i = 0; i < cfg_.fusion_blocks; ++i)
    layout_.fusion.push_back(add_conv(params_, name("fusion", i), i == 0 ? 3 * c : c, c, k3s1p1d1, rng));

  switch (cfg_.variant) {
  case Variant::Default:
    layout_.h1_head = add_conv(params_, "h1_head", c, 3, k3s1p1d1, rng);
    break;
  case Variant::ConfigA:
    layout_.h1_head = add_conv(params_, "a.h1_head", c, 3, k3s1p1d1, rng);
    layout_.stage2 = add_conv(params_, "a.stage2", c, c, k3s1p1d1, rng);
    layout_.h2_head = add_conv(params_, "a.h2_head", c, 3, k3s1p1d1, rng);
    break;
  case Variant::ConfigB:
    break;
  }
  for (std::size_t i = 0; i < cfg_.modulated_blocks; ++i)
    layout_.bright.push_back(add_conv(params_, name("bright", i), c, c, k3s1p1d1, rng));
  switch (cfg_.variant) {
  case Variant::Default:
    layout_.h2_head = add_conv(params_, "h2_head", c, 3, k3s1p1d1, rng);
    break;
  case Variant::ConfigA:
    layout_.h3_head = add_conv(params_, "a.h3_head", c, 3, k3s1p1d1, rng);
    break;
  case Variant::ConfigB:
    layout_.h2_head = add_conv(params_, "direct_head", c, 3, k3s1p1d1, rng);
    break;
  }
  layout_.lamn = build_lamn(params_, cfg_.modulated_blocks, c, rng);

  // The bright-part head feeds a ReLU whose input is amplified by the modulated
  // path inside saturated regions. With random weights a channel can start
  // negative at every pixel and never receive a gradient, so it starts at zero
  // weights and a small positive bias instead.
  const ConvSlot& relu_head = cfg_.variant == Variant::ConfigA ? layout_.h3_head : layout_.h2_head;
  params_[relu_head.weight].value.fill(T(0));
  params_[relu_head.bias].value.fill(static_cast<T>(kReluHeadBias));
}

template <typename T>
HisnNetwork<T>::HisnNetwork(HisnConfig cfg, ParameterSet<T> params) : HisnNetwork(std::move(cfg))
{
  if (params.size() != params_.size())
    throw InputError("parameter set has " + std::to_string(params.size()) + " tensors, network expects " +
                     std::to_string(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params[i].name != params_[i].name)
      throw InputError("parameter " + std::to_string(i) + " is '" + params[i].name + "', expected '" +
                       params_[i].name + "'");
    if (params[i].value.shape() != params_[i].value.shape())
      throw InputError("parameter '" + params_[i].name + "' has shape " + params[i].value.shape().str() +
                       ", expected " + params_[i].value.shape().str());
    params_[i].value = std::move(params[i].value);
  }
}

template <typename T>
HisnOutputs HisnNetwork<T>::forward(Graph<T>& g, std::span<const NodeId> bound, NodeId ldr, NodeId mask,
                                    const ForwardOptions& opts, std::optional<NodeId> global_frame) const
{
  if (bound.size() != params_.size())
    throw RuntimeError("forward: " + std::to_string(bound.size()) + " bound parameters, expected " +
                       std::to_string(params_.size()));
  const Shape& ls = g.value(ldr).shape();
  const Shape& ms = g.value(mask).shape();
  if (ls.rank() != 4 || ls.c() != 3)
    throw InputError("network input must be (N,3,H,W), got " + ls.str());
  if (ms.rank() != 4 || ms.c() != 1 || ms.n() != ls.n() || ms.h() != ls.h() || ms.w() != ls.w())
    throw InputError("mask " + ms.str() + " is not aligned with input " + ls.str());
  const NodeId gin = global_frame.value_or(ldr);
  const Shape& gs = g.value(gin).shape();
  if (gs.rank() != 4 || gs.c() != 3 || gs.n() != ls.n() || gs.h() != cfg_.global_size || gs.w() != cfg_.global_size)
    throw InputError("global branch input " + gs.str() + " must be " + std::to_string(cfg_.global_size) + "x" +
                     std::to_string(cfg_.global_size) + "; admissible global sizes: " +
                     admissible_sizes_hint(cfg_.global_size));

  auto conv = [&](NodeId x, const ConvSlot& s) { return g.conv2d(x, bound[s.weight], bound[s.bias], s.conv); };
  auto block = [&](NodeId x, const ConvSlot& s) { return g.relu(conv(x, s)); };

  NodeId local = ldr;
  for (const auto& s : layout_.local)
    local = block(local, s);
  NodeId dilated = ldr;
  for (const auto& s : layout_.dilation)
    dilated = block(dilated, s);
  NodeId global = gin;
  for (const auto& s : layout_.global)
    global = block(global, s);
  global = g.tile(global, ls.h(), ls.w());

  const NodeId branches[] = {local, dilated, global};
  NodeId features = g.concat(branches);
  for (const auto& s : layout_.fusion)
    features = block(features, s);

  HisnOutputs out;
  if (!opts.no_modulation)
    out.modulation = lamn_forward(g, bound, layout_.lamn, mask);

  auto bright_path = [&](NodeId x) {
    for (std::size_t i = 0; i < layout_.bright.size(); ++i) {
      x = block(x, layout_.bright[i]);
      if (opts.no_modulation)
        continue;
      if (opts.zero_modulation) {
        const NodeId zero = g.constant(Tensor<T>(g.value(x).shape()));
        x = modulate(g, x, zero, zero, i + 1);
      } else {
        x = modulate(g, x, out.modulation[i].gamma, out.modulation[i].beta, i + 1);
      }
    }
    return x;
  };

  switch (cfg_.variant) {
  case Variant::Default: {
    out.h1 = g.sigmoid(conv(features, layout_.h1_head));
    out.h2 = g.relu(conv(bright_path(features), layout_.h2_head));
    out.h = g.add(out.h1, out.h2);
    break;
  }
  case Variant::ConfigA: {
    out.h1 = g.sigmoid(conv(features, layout_.h1_head));
    const NodeId second = block(features, layout_.stage2);
    out.h2 = g.sigmoid(conv(second, layout_.h2_head));
    out.h3 = g.relu(conv(bright_path(second), layout_.h3_head));
    out.h = out.h3;
    break;
  }
  case Variant::ConfigB:
    out.h = g.relu(conv(bright_path(features), layout_.h2_head));
    break;
  }
  return out;
}

template class HisnNetwork<float>;
template class HisnNetwork<double>;

} // namespace itm
