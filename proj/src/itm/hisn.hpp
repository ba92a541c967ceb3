// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "itm/lamn.hpp"

namespace itm {

enum class Variant { Default, ConfigA, ConfigB };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct HisnConfig
{
  std::size_t width = 64;            // fusion width C
  std::size_t fusion_blocks = 5;     // m
  std::size_t modulated_blocks = 6;  // n
  std::size_t local_layers = 2;
  std::size_t dilation_layers = 4;
  std::size_t global_size = 256;     // square resolution seen by the global branch
  Variant variant = Variant::Default;
  std::uint64_t seed = 0;

  /// C=16, 64x64 global input, m=5, n=6.
  static HisnConfig toy();

  void validate() const;
  /// Number of stride-2 convolutions that bring global_size down to 4.
  std::size_t global_reductions() const;
};

/// Initial bias of the ReLU output head (weights start at zero).
inline constexpr double kReluHeadBias = 1e-3;

/// Sizes the global branch can reduce to 1x1: 4 * 2^k.
bool admissible_global_size(std::size_t size);
std::string admissible_sizes_hint(std::size_t near);

/// Parameter slots of the whole network (branches, fusion, heads, LAMN).
struct HisnLayout
{
  std::vector<ConvSlot> local;
  std::vector<ConvSlot> dilation;
  std::vector<ConvSlot> global;  // strided convs followed by the k4s1p0d1 conv
  std::vector<ConvSlot> fusion;
  std::vector<ConvSlot> bright;  // n modulated blocks
  ConvSlot h1_head;              // default: H1; configA: h1'
  ConvSlot h2_head;              // default: H2; configA: h2'; configB: direct head
  ConvSlot h3_head;              // configA only
  ConvSlot stage2;               // configA only: block between h1' and h2'
  LamnLayout lamn;
};

struct ForwardOptions
{
  /// Feed gamma = beta = 0 into every modulation (identity modulation).
  bool zero_modulation = false;
  /// Skip modulation entirely (the unmodulated pathway).
  bool no_modulation = false;
};

/// Graph handles of one forward pass. For the default variant h1/h2 are the
/// dim/bright parts; for config A they hold h1' and h2' and h3 holds h3'.
/// For config B only h is set.
struct HisnOutputs
{
  NodeId h1;
  NodeId h2;
  NodeId h3;
  NodeId h;
  std::vector<Modulation> modulation;
};

template <typename T>
class HisnNetwork
{
public:
  explicit HisnNetwork(HisnConfig cfg);
  HisnNetwork(HisnConfig cfg, ParameterSet<T> params);

  const HisnConfig& config() const { return cfg_; }
  const HisnLayout& layout() const { return layout_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  /// `ldr` is (N,3,H,W), `mask` (N,1,H,W). The global branch reads
  /// `global_frame` when given, else `ldr`; either must be
  /// (N,3,global_size,global_size).
  HisnOutputs forward(Graph<T>& g, std::span<const NodeId> bound, NodeId ldr, NodeId mask,
                      const ForwardOptions& opts = {}, std::optional<NodeId> global_frame = std::nullopt) const;

  template <typename U>
  HisnNetwork<U> cast() const
  {
    return HisnNetwork<U>(cfg_, params_.template cast<U>());
  }

private:
  HisnConfig cfg_;
  ParameterSet<T> params_;
  HisnLayout layout_;
};

extern template class HisnNetwork<float>;
extern template class HisnNetwork<double>;

} // namespace itm
