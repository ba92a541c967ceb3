// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "itm/checkpoint.hpp"

namespace itm {

std::string to_string(MaskVariant v)
{
  switch (v) {
  case MaskVariant::Default:
    return "default";
  case MaskVariant::ConfigC:
    return "configC";
  case MaskVariant::ConfigD:
    return "configD";
  case MaskVariant::ConfigE:
    return "configE";
  }
  return "default";
}

MaskVariant parse_mask_variant(const std::string& s)
{
  if (s == "default")
    return MaskVariant::Default;
  if (s == "configC" || s == "C")
    return MaskVariant::ConfigC;
  if (s == "configD" || s == "D")
    return MaskVariant::ConfigD;
  if (s == "configE" || s == "E")
    return MaskVariant::ConfigE;
  throw ConfigError("unknown mask variant '" + s + "' (expected default|configC|configD|configE)");
}

Mask apply_mask_variant(const Mask& m, MaskVariant variant, const LdrImage& source)
{
  switch (variant) {
  case MaskVariant::Default:
    return m;
  case MaskVariant::ConfigC:
    return compute_mask(source, kConfigCTau);
  case MaskVariant::ConfigD: {
    Mask out(m.width(), m.height(), 0.0);
    out.tau = m.tau;
    return out;
  }
  case MaskVariant::ConfigE: {
    Mask out(m.width(), m.height(), 1.0);
    out.tau = m.tau;
    return out;
  }
  }
  return m;
}

TrainConfig TrainConfig::toy()
{
  TrainConfig c;
  c.iterations = 2000;
  c.crop_size = 64;
  c.batch_size = 4;
  c.learning_rate = 1e-3;
  c.decay = 0.5;
  c.decay_interval = 500;
  return c;
}

void TrainConfig::validate() const
{
  if (!(lambda > 0.0))
    throw ConfigError("lambda must be > 0");
  if (!(mu > 0.0))
    throw ConfigError("mu must be > 0");
  if (!(learning_rate > 0.0))
    throw ConfigError("learning_rate must be > 0");
  if (!(decay > 0.0 && decay <= 1.0))
    throw ConfigError("decay must lie in (0, 1]");
  if (decay_interval < 1)
    throw ConfigError("decay_interval must be >= 1");
  if (batch_size < 1)
    throw ConfigError("batch_size must be >= 1");
  if (crop_size < 16)
    throw ConfigError("crop_size must be >= 16");
  if (!(tau > 0.0 && tau < 1.0))
    throw ConfigError("tau must lie in (0, 1)");
}

double TrainConfig::learning_rate_at(std::size_t iteration) const
{
  return learning_rate * std::pow(decay, static_cast<double>(iteration / decay_interval));
}

TrainingSample TrainingSample::from_pair(const SynthesizedPair& p, Provenance provenance)
{
  return TrainingSample{p.ldr, p.dim_target, p.bright_target, p.crf_target, std::move(provenance)};
}

HdrImage TrainingSample::exposed() const
{
  HdrImage out(dim_target.width(), dim_target.height());
  auto d = dim_target.data();
  auto b = bright_target.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = d[i] + b[i];
  return out;
}

double log_map(double h, double mu)
{
  if (!(h >= 0.0))
    throw InputError("log_map input " + std::to_string(h) + " is negative");
  if (!(mu > 0.0))
    throw ConfigError("log_map mu must be > 0");
  return std::log1p(mu * h) / std::log1p(mu);
}

HdrImage log_map(const HdrImage& h, double mu)
{
  HdrImage out = h;
  for (double& v : out.data())
    v = log_map(v, mu);
  return out;
}

namespace {

template <typename T>
NodeId rms(Graph<T>& g, NodeId a, NodeId b)
{
  return g.sqrt(g.mean(g.square(g.sub(a, b))));
}

void check_finite(double v, const char* term)
{
  if (!std::isfinite(v))
    throw RuntimeError(std::string("loss ") + term + " is not finite");
}

} // namespace

template <typename T>
BatchTensors<T> make_batch(std::span<const TrainingSample> samples, double tau, MaskVariant variant)
{
  std::vector<LdrImage> ldr, dim, crf;
  std::vector<HdrImage> bright;
  std::vector<Mask> masks;
  for (const auto& s : samples) {
    if (!s.ldr.same_geometry(s.dim_target) || !s.ldr.same_geometry(s.bright_target) ||
        !s.ldr.same_geometry(s.crf_target))
      throw InputError("training sample targets are not aligned with its LDR input");
    ldr.push_back(s.ldr);
    dim.push_back(s.dim_target);
    bright.push_back(s.bright_target);
    crf.push_back(s.crf_target);
    masks.push_back(apply_mask_variant(compute_mask(s.ldr, tau), variant, s.ldr));
  }
  BatchTensors<T> b;
  b.ldr = to_tensor<T, LdrImage>(ldr);
  b.mask = to_tensor<T, Mask>(masks);
  b.dim = to_tensor<T, LdrImage>(dim);
  b.bright = to_tensor<T, HdrImage>(bright);
  b.crf = to_tensor<T, LdrImage>(crf);
  return b;
}

template <typename T>
LossNodes<T> build_loss(Graph<T>& g, const HisnOutputs& out, Variant variant, NodeId dim, NodeId bright, NodeId crf,
                        double lambda, double mu)
{
  const T m = static_cast<T>(mu);
  LossNodes<T> l;
  switch (variant) {
  case Variant::Default:
    l.term1 = rms(g, out.h1, dim);
    l.term2 = rms(g, g.log_map(out.h2, m), g.log_map(bright, m));
    break;
  case Variant::ConfigA: {
    l.term1 = g.add(rms(g, out.h1, crf), rms(g, out.h2, dim));
    const NodeId exposed = g.add(dim, bright);
    l.term2 = rms(g, g.log_map(out.h3, m), g.log_map(exposed, m));
    break;
  }
  case Variant::ConfigB: {
    const NodeId h1 = g.min_scalar(out.h, T(1));
    const NodeId h2 = g.sub(out.h, h1);
    l.term1 = rms(g, h1, dim);
    l.term2 = rms(g, g.log_map(h2, m), g.log_map(bright, m));
    break;
  }
  }
  l.total = g.add(l.term1, g.scale(l.term2, static_cast<T>(lambda)));
  return l;
}

LossValue loss(const HdrImage& h1, const HdrImage& h2, const TrainingSample& sample, double lambda, double mu)
{
  if (!h1.same_geometry(sample.dim_target) || !h2.same_geometry(sample.bright_target))
    throw InputError("loss: prediction and target shapes differ");
  Graph<double> g;
  HisnOutputs out;
  out.h1 = g.constant(to_tensor<double>(h1));
  out.h2 = g.constant(to_tensor<double>(h2));
  const NodeId dim = g.constant(to_tensor<double>(sample.dim_target));
  const NodeId bright = g.constant(to_tensor<double>(sample.bright_target));
  const auto l = build_loss(g, out, Variant::Default, dim, bright, dim, lambda, mu);
  LossValue v{g.value(l.term1)[0], g.value(l.term2)[0], g.value(l.total)[0]};
  check_finite(v.term1, "term1 (dim part)");
  check_finite(v.term2, "term2 (bright part)");
  return v;
}

namespace {

struct StepResult
{
  LossValue loss;
  std::vector<Tensor<float>> grads;
};

StepResult forward_backward(const HisnNetwork<float>& net, const BatchTensors<float>& batch, const TrainConfig& cfg,
                            bool with_grad)
{
  Graph<float> g;
  const auto bound = net.params().bind(g);
  const NodeId ldr = g.constant(batch.ldr);
  const NodeId mask = g.constant(batch.mask);
  const NodeId dim = g.constant(batch.dim);
  const NodeId bright = g.constant(batch.bright);
  const NodeId crf = g.constant(batch.crf);
  const auto out = net.forward(g, bound, ldr, mask);
  const auto l = build_loss(g, out, net.config().variant, dim, bright, crf, cfg.lambda, cfg.mu);

  StepResult r;
  r.loss = {g.value(l.term1)[0], g.value(l.term2)[0], g.value(l.total)[0]};
  check_finite(r.loss.term1, "term1 (dim part)");
  check_finite(r.loss.term2, "term2 (bright part)");
  if (with_grad) {
    g.backward(l.total);
    r.grads.reserve(bound.size());
    for (NodeId id : bound)
      r.grads.push_back(g.grad(id));
  }
  return r;
}

TrainingSample crop_sample(const TrainingSample& s, std::size_t x0, std::size_t y0, std::size_t size)
{
  return TrainingSample{crop(s.ldr, x0, y0, size, size), crop(s.dim_target, x0, y0, size, size),
                        crop(s.bright_target, x0, y0, size, size), crop(s.crf_target, x0, y0, size, size),
                        s.provenance};
}

void check_dataset(const std::vector<TrainingSample>& dataset, const HisnConfig& net, const TrainConfig& cfg)
{
  if (dataset.empty())
    throw InputError("training dataset is empty");
  if (cfg.crop_size != net.global_size)
    throw ConfigError("crop_size " + std::to_string(cfg.crop_size) + " must equal the network global_size " +
                      std::to_string(net.global_size));
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset[i].ldr.width() < cfg.crop_size || dataset[i].ldr.height() < cfg.crop_size)
      throw InputError("training sample " + std::to_string(i) + " is smaller than the " +
                       std::to_string(cfg.crop_size) + "px crop");
}

} // namespace

TrainResult train(const std::vector<TrainingSample>& dataset, const HisnConfig& net_cfg, const TrainConfig& cfg,
                  const TrainHooks& hooks)
{
  HisnNetwork<float> net(net_cfg);
  auto adam = make_adam_state(net.params());
  return train(dataset, TrainState{std::move(net), std::move(adam), 0}, cfg, hooks);
}

TrainResult train(const std::vector<TrainingSample>& dataset, TrainState state, const TrainConfig& cfg,
                  const TrainHooks& hooks)
{
  cfg.validate();
  check_dataset(dataset, state.network.config(), cfg);

  TrainResult result{std::move(state), {}};
  TrainState& st = result.state;
  std::vector<std::size_t> order(dataset.size());
  std::vector<TrainingSample> picked;
  picked.reserve(cfg.batch_size);

  while (st.iteration < cfg.iterations) {
    // The batch depends only on (seed, iteration), so resumed runs draw the same data.
    std::mt19937_64 rng(derive_seed(cfg.seed, st.iteration));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    picked.clear();
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const auto& s = dataset[order[b % order.size()]];
      std::uniform_int_distribution<std::size_t> ux(0, s.ldr.width() - cfg.crop_size);
      std::uniform_int_distribution<std::size_t> uy(0, s.ldr.height() - cfg.crop_size);
      const std::size_t x0 = ux(rng);
      const std::size_t y0 = uy(rng);
      picked.push_back(crop_sample(s, x0, y0, cfg.crop_size));
    }
    const auto batch = make_batch<float>(picked, cfg.tau, cfg.mask_variant);
    const double lr = cfg.learning_rate_at(st.iteration);

    StepResult step;
    try {
      step = forward_backward(st.network, batch, cfg, true);
      adam_step(st.network.params(), step.grads, st.adam, lr);
    } catch (const RuntimeError& e) {
      // Parameters are untouched when either check fires, so they are the last good ones.
      if (hooks.rescue_checkpoint)
        save_checkpoint(*hooks.rescue_checkpoint, st);
      throw RuntimeError("training diverged at iteration " + std::to_string(st.iteration) + ": " + e.what() +
                         (hooks.rescue_checkpoint ? "; last good checkpoint: " + hooks.rescue_checkpoint->string()
                                                  : std::string()));
    }

    LossLogRow row{st.iteration, lr, step.loss};
    result.log.push_back(row);
    ++st.iteration;
    if (hooks.on_iteration && !hooks.on_iteration(row, st))
      break;
  }
  return result;
}

LossValue evaluate_loss(const HisnNetwork<float>& net, const std::vector<TrainingSample>& dataset,
                        const TrainConfig& cfg)
{
  check_dataset(dataset, net.config(), cfg);
  LossValue sum;
  for (const auto& s : dataset) {
    const std::size_t x0 = (s.ldr.width() - cfg.crop_size) / 2;
    const std::size_t y0 = (s.ldr.height() - cfg.crop_size) / 2;
    const TrainingSample c = crop_sample(s, x0, y0, cfg.crop_size);
    const auto batch = make_batch<float>(std::span<const TrainingSample>(&c, 1), cfg.tau, cfg.mask_variant);
    const auto r = forward_backward(net, batch, cfg, false);
    sum.term1 += r.loss.term1;
    sum.term2 += r.loss.term2;
    sum.total += r.loss.total;
  }
  const double n = static_cast<double>(dataset.size());
  return {sum.term1 / n, sum.term2 / n, sum.total / n};
}

LdrImage resample_bilinear(const LdrImage& in, std::size_t width, std::size_t height)
{
  if (in.empty() || width == 0 || height == 0)
    throw InputError("resample: empty image");
  LdrImage out(width, height);
  out.quantized = false;
  const double sx = static_cast<double>(in.width()) / static_cast<double>(width);
  const double sy = static_cast<double>(in.height()) / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, double(in.height() - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, in.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, double(in.width() - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, in.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = in.at(c, y0, x0) * (1 - wx) + in.at(c, y0, x1) * wx;
        const double bottom = in.at(c, y1, x0) * (1 - wx) + in.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1 - wy) + bottom * wy;
      }
    }
  }
  return out;
}

Prediction predict(const HisnNetwork<float>& net, const LdrImage& ldr, double tau, MaskVariant variant)
{
  ldr.validate();
  const std::size_t gsize = net.config().global_size;
  Prediction p;
  p.mask = apply_mask_variant(compute_mask(ldr, tau), variant, ldr);

  Graph<float> g;
  const auto bound = net.params().bind(g);
  const NodeId in = g.constant(to_tensor<float>(ldr));
  const NodeId mask = g.constant(to_tensor<float>(p.mask));
  std::optional<NodeId> frame;
  if (ldr.width() != gsize || ldr.height() != gsize)
    frame = g.constant(to_tensor<float>(resample_bilinear(ldr, gsize, gsize)));
  const auto out = net.forward(g, bound, in, mask, {}, frame);

  p.h = from_tensor<HdrImage>(g.value(out.h));
  if (net.config().variant == Variant::Default) {
    p.h1 = from_tensor<HdrImage>(g.value(out.h1));
    p.h2 = from_tensor<HdrImage>(g.value(out.h2));
  } else {
    p.h1 = p.h;
    p.h2 = p.h;
    auto h = p.h.data();
    auto a = p.h1.data();
    auto b = p.h2.data();
    for (std::size_t i = 0; i < h.size(); ++i) {
      a[i] = std::min(h[i], 1.0);
      b[i] = h[i] - a[i];
    }
  }
  return p;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossLogRow>& rows)
{
  std::ofstream out(path);
  if (!out)
    throw RuntimeError("cannot write loss log " + path.string());
  out << "iteration,lr,term1,term2,total\n" << std::setprecision(9);
  for (const auto& r : rows)
    out << r.iteration << ',' << r.lr << ',' << r.loss.term1 << ',' << r.loss.term2 << ',' << r.loss.total << '\n';
  if (!out)
    throw RuntimeError("write failed for " + path.string());
}

template BatchTensors<float> make_batch(std::span<const TrainingSample>, double, MaskVariant);
template BatchTensors<double> make_batch(std::span<const TrainingSample>, double, MaskVariant);
template LossNodes<float> build_loss(Graph<float>&, const HisnOutputs&, Variant, NodeId, NodeId, NodeId, double,
                                     double);
template LossNodes<double> build_loss(Graph<double>&, const HisnOutputs&, Variant, NodeId, NodeId, NodeId, double,
                                      double);

} // namespace itm
