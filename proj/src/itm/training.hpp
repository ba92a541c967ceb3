// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "itm/adam.hpp"
#include "itm/hisn.hpp"
#include "itm/pipeline.hpp"

namespace itm {

enum class MaskVariant { Default, ConfigC, ConfigD, ConfigE };

std::string to_string(MaskVariant v);
MaskVariant parse_mask_variant(const std::string& s);

/// Threshold used by the config C mask.
inline constexpr double kConfigCTau = 1.0 - 1e-10;

/// default: unchanged; configC: recomputed from `source` with tau = 1 - 1e-10;
/// configD: all zeros; configE: all ones.
Mask apply_mask_variant(const Mask& m, MaskVariant variant, const LdrImage& source);

struct TrainConfig
{
  double lambda = 1.0;
  double mu = 5000.0;
  std::size_t batch_size = 16;
  std::size_t iterations = 20000;
  double learning_rate = 1e-4;
  double decay = 0.9;
  std::size_t decay_interval = 5000;
  std::size_t crop_size = 256;
  double tau = kDefaultTau;
  MaskVariant mask_variant = MaskVariant::Default;
  std::uint64_t seed = 0;

  /// 2000 iterations on 64x64 crops.
  static TrainConfig toy();

  void validate() const;
  /// lr0 * decay^floor(iteration / decay_interval)
  double learning_rate_at(std::size_t iteration) const;
};

struct Provenance
{
  double exposure = 1.0;
  std::string crf;
  double sigma_s = 0.0;
  double sigma_c = 0.0;
  std::optional<int> jpeg_quality;
  std::uint64_t seed = 0;
};

struct TrainingSample
{
  LdrImage ldr;
  LdrImage dim_target;     // C(H*t)
  HdrImage bright_target;  // H*t - C(H*t)
  LdrImage crf_target;     // F(C(H*t)); supervises h1' of config A
  Provenance provenance;

  static TrainingSample from_pair(const SynthesizedPair& p, Provenance provenance);
  HdrImage exposed() const;
};

/// log(1 + mu*H) / log(1 + mu), elementwise.
double log_map(double h, double mu);
HdrImage log_map(const HdrImage& h, double mu);

struct LossValue
{
  double term1 = 0.0;  // dim part (config A: h1' and h2' terms)
  double term2 = 0.0;  // log-domain bright part, before the lambda weight
  double total = 0.0;  // term1 + lambda * term2
};

/// Loss nodes for one forward pass; targets are bound as graph constants.
template <typename T>
struct LossNodes
{
  NodeId term1;
  NodeId term2;
  NodeId total;
};

template <typename T>
struct BatchTensors
{
  Tensor<T> ldr;
  Tensor<T> mask;
  Tensor<T> dim;
  Tensor<T> bright;
  Tensor<T> crf;
};

/// Packs samples into tensors, computing masks with `tau` and applying `variant`.
template <typename T>
BatchTensors<T> make_batch(std::span<const TrainingSample> samples, double tau, MaskVariant variant);

template <typename T>
LossNodes<T> build_loss(Graph<T>& g, const HisnOutputs& out, Variant variant, NodeId dim, NodeId bright,
                        NodeId crf, double lambda, double mu);

/// Root-mean-square form of the hierarchical loss on plain images:
/// rms(H1 - dim) + lambda * rms(T(H2) - T(bright)).
LossValue loss(const HdrImage& h1, const HdrImage& h2, const TrainingSample& sample, double lambda, double mu);

struct LossLogRow
{
  std::size_t iteration = 0;
  double lr = 0.0;
  LossValue loss;
};

struct TrainState
{
  HisnNetwork<float> network;
  AdamState<float> adam;
  std::size_t iteration = 0;
};

struct TrainResult
{
  TrainState state;
  std::vector<LossLogRow> log;
};

struct TrainHooks
{
  /// Called after each logged iteration; returning false stops training.
  std::function<bool(const LossLogRow&, const TrainState&)> on_iteration;
  /// Where the last good checkpoint goes when the loss diverges.
  std::optional<std::filesystem::path> rescue_checkpoint;
};

/// ADAM over the hierarchical loss with a step-decayed learning rate. Batches
/// and crops are drawn from an RNG seeded by (cfg.seed, iteration), so runs
/// are reproducible and resumable.
TrainResult train(const std::vector<TrainingSample>& dataset, const HisnConfig& net_cfg, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

/// Continues from an existing state (resumed checkpoint).
TrainResult train(const std::vector<TrainingSample>& dataset, TrainState state, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

/// Full-dataset loss with the current parameters (forward only).
LossValue evaluate_loss(const HisnNetwork<float>& net, const std::vector<TrainingSample>& dataset,
                        const TrainConfig& cfg);

/// Inference on one image. The global branch sees the image itself when its
/// size matches, otherwise a bilinear resample to global_size.
struct Prediction
{
  HdrImage h1;
  HdrImage h2;
  HdrImage h;
  Mask mask;
};

Prediction predict(const HisnNetwork<float>& net, const LdrImage& ldr, double tau = kDefaultTau,
                   MaskVariant variant = MaskVariant::Default);

/// Bilinear resample (align corners off) used for global-branch frames.
LdrImage resample_bilinear(const LdrImage& in, std::size_t width, std::size_t height);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossLogRow>& rows);

extern template BatchTensors<float> make_batch(std::span<const TrainingSample>, double, MaskVariant);
extern template BatchTensors<double> make_batch(std::span<const TrainingSample>, double, MaskVariant);
extern template LossNodes<float> build_loss(Graph<float>&, const HisnOutputs&, Variant, NodeId, NodeId, NodeId,
                                            double, double);
extern template LossNodes<double> build_loss(Graph<double>&, const HisnOutputs&, Variant, NodeId, NodeId, NodeId,
                                             double, double);

} // namespace itm
