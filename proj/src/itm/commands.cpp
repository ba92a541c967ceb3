// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <random>

#include "itm/checkpoint.hpp"
#include "itm/gradcheck.hpp"
#include "itm/hdr_io.hpp"
#include "itm/logging.hpp"
#include "itm/png_io.hpp"
#include "itm/tonemap.hpp"

namespace itm {

using nlohmann::json;

namespace {

CurveSplit parse_split(const std::string& s)
{
  if (s == "train")
    return CurveSplit::Train;
  if (s == "test")
    return CurveSplit::Test;
  return CurveSplit::All;
}

std::vector<fs::path> list_hdr_inputs(const fs::path& dir)
{
  if (!fs::is_directory(dir))
    throw InputError("HDR input directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file())
      continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".hdr" || ext == ".pfm")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string pair_id(std::size_t index, const fs::path& source)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu_", index);
  return buf + source.stem().string();
}

void write_json(const fs::path& path, const json& j)
{
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out)
    throw RuntimeError("cannot write " + path.string());
}

LdrImage as_ldr(const HdrImage& h)
{
  LdrImage out(h.width(), h.height());
  auto src = h.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = std::clamp(src[i], 0.0, 1.0);
  return out;
}

} // namespace

SynthSummary synthesize_dataset(const RunConfig& cfg, const fs::path& hdr_dir, const fs::path& out_dir,
                                std::uint64_t seed)
{
  cfg.pipeline.validate();
  const auto files = list_hdr_inputs(hdr_dir);
  if (files.empty())
    throw InputError("no .hdr or .pfm files in " + hdr_dir.string());

  std::vector<HdrImage> sources;
  std::string failures;
  for (const auto& f : files) {
    try {
      sources.push_back(read_hdr_image(f));
      sources.back().validate();
    } catch (const Error& e) {
      failures += "\n  " + f.filename().string() + ": " + e.what();
    }
  }
  if (!failures.empty())
    throw InputError("unreadable HDR inputs:" + failures);

  const auto curves = load_response_curves(cfg.pipeline.crf_source, parse_split(cfg.pipeline.crf_split));
  const auto exposures = cfg.pipeline.exposures.empty()
                             ? sample_exposures(cfg.pipeline.exposure_count, cfg.pipeline.exposure_lo_log2,
                                                cfg.pipeline.exposure_hi_log2)
                             : cfg.pipeline.exposures;

  fs::create_directories(out_dir);
  json pairs = json::array();
  std::size_t index = 0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (double t : exposures) {
      for (const auto& curve : curves) {
        const std::uint64_t pair_seed = derive_seed(seed, index);
        std::mt19937_64 rng(pair_seed);
        std::optional<NoiseParams> noise;
        std::optional<int> quality;
        if (cfg.pipeline.noise)
          noise = sample_noise_params(rng, cfg.pipeline.sigma_s_max, cfg.pipeline.sigma_c_max);
        if (cfg.pipeline.jpeg) {
          std::uniform_int_distribution<int> q(cfg.pipeline.jpeg_quality_min, cfg.pipeline.jpeg_quality_max);
          quality = q(rng);
        }
        const auto p = synthesize_pair(sources[s], t, curve, noise, quality);

        const std::string id = pair_id(index, files[s]);
        const std::string ldr_name = id + "_ldr.png";
        const std::string hdr_name = id + "_hdr.pfm";
        const std::string crf_name = id + "_crf.pfm";
        write_png(out_dir / ldr_name, p.ldr);
        write_pfm(out_dir / hdr_name, p.exposed);
        HdrImage crf(p.crf_target.width(), p.crf_target.height());
        std::copy(p.crf_target.data().begin(), p.crf_target.data().end(), crf.data().begin());
        write_pfm(out_dir / crf_name, crf);

        json entry = {{"id", id},
                      {"source", files[s].filename().string()},
                      {"exposure", t},
                      {"crf", curve.name()},
                      {"seed", pair_seed},
                      {"ldr", ldr_name},
                      {"hdr", hdr_name},
                      {"crf_target", crf_name}};
        entry["noise"] = noise ? json{{"sigma_s", noise->sigma_s}, {"sigma_c", noise->sigma_c}, {"seed", noise->seed}}
                               : json(nullptr);
        entry["jpeg_quality"] = quality ? json(*quality) : json(nullptr);
        pairs.push_back(std::move(entry));
        ++index;
      }
    }
  }

  json manifest = {{"schema_version", kSchemaVersion},
                   {"seed", seed},
                   {"config", to_json(cfg)},
                   {"sources", sources.size()},
                   {"exposures", exposures},
                   {"crfs", curves.size()},
                   {"pairs", pairs}};
  const fs::path mpath = out_dir / kManifestName;
  write_json(mpath, manifest);
  return SynthSummary{sources.size(), index, mpath};
}

std::vector<TrainingSample> load_dataset(const fs::path& dir)
{
  const fs::path mpath = dir / kManifestName;
  std::ifstream in(mpath);
  if (!in)
    throw InputError("dataset manifest not found: " + mpath.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(mpath.string() + ": " + e.what());
  }
  std::vector<TrainingSample> out;
  try {
    for (const auto& p : m.at("pairs")) {
      TrainingSample s;
      s.ldr = read_png(dir / p.at("ldr").get<std::string>());
      const HdrImage exposed = read_pfm(dir / p.at("hdr").get<std::string>());
      s.dim_target = clip_dynamic_range(exposed);
      s.bright_target = clipped_residual(exposed);
      s.crf_target = as_ldr(read_pfm(dir / p.at("crf_target").get<std::string>()));
      if (!s.ldr.same_geometry(s.dim_target) || !s.ldr.same_geometry(s.crf_target))
        throw InputError("pair " + p.at("id").get<std::string>() + ": LDR and targets differ in size");
      s.provenance.exposure = p.at("exposure").get<double>();
      s.provenance.crf = p.at("crf").get<std::string>();
      s.provenance.seed = p.at("seed").get<std::uint64_t>();
      if (!p.at("noise").is_null()) {
        s.provenance.sigma_s = p["noise"].at("sigma_s").get<double>();
        s.provenance.sigma_c = p["noise"].at("sigma_c").get<double>();
      }
      if (!p.at("jpeg_quality").is_null())
        s.provenance.jpeg_quality = p["jpeg_quality"].get<int>();
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw InputError(mpath.string() + ": malformed manifest: " + e.what());
  }
  if (out.empty())
    throw InputError(mpath.string() + " lists no pairs");
  return out;
}

std::vector<TrainingSample> procedural_dataset(std::size_t count, std::size_t size, std::uint64_t seed,
                                               double exposure)
{
  std::vector<TrainingSample> out;
  const auto crf = ResponseCurve::identity();
  for (std::size_t i = 0; i < count; ++i) {
    const auto h = procedural_scene(derive_seed(seed, i), size, size);
    const auto p = synthesize_pair(h, exposure, crf, std::nullopt, std::nullopt);
    Provenance prov;
    prov.exposure = exposure;
    prov.crf = crf.name();
    prov.seed = derive_seed(seed, i);
    out.push_back(TrainingSample::from_pair(p, prov));
  }
  return out;
}

TrainSummary run_training(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
                          const std::optional<fs::path>& resume, const ProgressFn& progress)
{
  cfg.validate();
  const auto dataset = load_dataset(data_dir);
  fs::create_directories(out_dir);

  std::optional<TrainState> state;
  if (resume) {
    auto loaded = load_checkpoint(*resume);
    if (to_json(loaded.state.network.config()) != to_json(cfg.network))
      log::warn("resuming with the network config stored in " + resume->string());
    state.emplace(std::move(loaded.state));
  } else {
    HisnNetwork<float> net(cfg.network);
    auto adam = make_adam_state(net.params());
    state.emplace(TrainState{std::move(net), std::move(adam), 0});
  }

  const json echo = to_json(cfg);
  const fs::path ckpt = out_dir / "checkpoint.itmc";
  TrainHooks hooks;
  hooks.rescue_checkpoint = out_dir / "checkpoint_last_good.itmc";
  hooks.on_iteration = [&](const LossLogRow& row, const TrainState& st) {
    if (st.iteration % 1000 == 0)
      save_checkpoint(ckpt, st, echo);
    return !progress || progress(row);
  };
  auto result = train(dataset, std::move(*state), cfg.train, hooks);
  save_checkpoint(ckpt, result.state, echo);
  const fs::path log = out_dir / "loss.csv";
  write_loss_csv(log, result.log);

  TrainSummary summary;
  summary.iterations = result.state.iteration;
  summary.final_loss = result.log.empty() ? LossValue{} : result.log.back().loss;
  summary.checkpoint = ckpt;
  summary.loss_log = log;
  return summary;
}

InferenceSettings inference_settings(const json& echo)
{
  InferenceSettings s;
  if (echo.is_object() && echo.contains("train")) {
    const TrainConfig t = train_from_json(echo["train"]);
    s.tau = t.tau;
    s.mask_variant = t.mask_variant;
  }
  return s;
}

Prediction run_inference(const fs::path& checkpoint, const fs::path& ldr_path, const fs::path& out_hdr,
                         const InferOutputs& extra)
{
  const auto loaded = load_checkpoint(checkpoint);
  const auto settings = inference_settings(loaded.echo);
  const LdrImage ldr = read_ldr_image(ldr_path);
  Prediction p = predict(loaded.state.network, ldr, settings.tau, settings.mask_variant);
  if (out_hdr.has_parent_path())
    fs::create_directories(out_hdr.parent_path());
  write_hdr_image(out_hdr, p.h);
  if (extra.mask_png)
    write_png(*extra.mask_png, p.mask);
  if (extra.preview_dir)
    exposure_stack_preview(p.h, kPreviewExposures, ResponseCurve::identity(), *extra.preview_dir);
  return p;
}

std::vector<std::pair<std::string, RunConfig>> ablation_variants(const RunConfig& base)
{
  std::vector<std::pair<std::string, RunConfig>> out;
  auto add = [&](const char* name, Variant v, MaskVariant m) {
    RunConfig c = base;
    c.network.variant = v;
    c.train.mask_variant = m;
    out.emplace_back(name, c);
  };
  add("default", Variant::Default, MaskVariant::Default);
  add("configA", Variant::ConfigA, MaskVariant::Default);
  add("configB", Variant::ConfigB, MaskVariant::Default);
  add("configC", Variant::Default, MaskVariant::ConfigC);
  add("configD", Variant::Default, MaskVariant::ConfigD);
  add("configE", Variant::Default, MaskVariant::ConfigE);
  return out;
}

double dataset_pu_psnr(const HisnNetwork<float>& net, const std::vector<TrainingSample>& dataset,
                       const TrainConfig& cfg)
{
  double sum = 0.0;
  for (const auto& s : dataset) {
    const auto p = predict(net, s.ldr, cfg.tau, cfg.mask_variant);
    sum += score_pair(p.h, s.exposed()).pu_psnr_db;
  }
  return sum / static_cast<double>(dataset.size());
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<TrainingSample>& dataset,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::function<void(const AblationRow&)>& on_row)
{
  std::vector<AblationRow> rows;
  for (std::uint64_t seed : seeds) {
    for (auto [name, cfg] : ablation_variants(base)) {
      cfg.network.seed = seed;
      cfg.train.seed = seed;
      cfg.validate();
      const auto result = train(dataset, cfg.network, cfg.train);
      AblationRow row;
      row.variant = name;
      row.seed = seed;
      row.iterations = result.state.iteration;
      row.final_loss = evaluate_loss(result.state.network, dataset, cfg.train);
      row.pu_psnr_db = dataset_pu_psnr(result.state.network, dataset, cfg.train);
      if (on_row)
        on_row(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_ablation_csv(const fs::path& path, const std::vector<AblationRow>& rows)
{
  std::ofstream out(path);
  if (!out)
    throw RuntimeError("cannot write " + path.string());
  out << "variant,seed,iterations,term1,term2,final_loss,pu_psnr_db\n" << std::setprecision(9);
  for (const auto& r : rows)
    out << r.variant << ',' << r.seed << ',' << r.iterations << ',' << r.final_loss.term1 << ','
        << r.final_loss.term2 << ',' << r.final_loss.total << ',' << r.pu_psnr_db << '\n';
  if (!out)
    throw RuntimeError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Gradient checks

namespace {

using GraphBuilder = std::function<NodeId(Graph<double>&, std::span<const NodeId>)>;

constexpr double kFdStep = 1e-7;
constexpr std::size_t kMaxCoordinates = 48;

Tensor<double> random_tensor(std::mt19937_64& rng, Shape shape, double lo, double hi)
{
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(std::move(shape));
  for (double& v : t.data())
    v = u(rng);
  return t;
}

std::vector<std::size_t> pick_coordinates(std::size_t size, std::size_t limit, std::mt19937_64& rng)
{
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i)
    idx[i] = i;
  if (size > limit) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(limit);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

// Weighted sum of the op's output against fixed random weights, so every
// output element contributes a distinct sensitivity.
GradcheckRow check_op(const std::string& name, std::vector<Tensor<double>> inputs, const GraphBuilder& build,
                      std::mt19937_64& rng)
{
  Tensor<double> weights;
  auto evaluate = [&](const std::vector<Tensor<double>>& xs, std::vector<Tensor<double>>* grads) {
    Graph<double> g;
    std::vector<NodeId> ids;
    for (const auto& x : xs)
      ids.push_back(g.parameter(x));
    const NodeId y = build(g, ids);
    if (weights.empty())
      weights = random_tensor(rng, g.value(y).shape(), -1.0, 1.0);
    const NodeId loss = g.sum(g.mul(y, g.constant(weights)));
    if (grads) {
      g.backward(loss);
      for (NodeId id : ids)
        grads->push_back(g.grad(id));
    }
    return g.value(loss)[0];
  };

  std::vector<Tensor<double>> analytic;
  evaluate(inputs, &analytic);
  GradcheckRow row{name, 0.0, 0, true};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto coords = pick_coordinates(inputs[i].size(), kMaxCoordinates, rng);
    Tensor<double> a(Shape{coords.size()}), n(Shape{coords.size()});
    for (std::size_t k = 0; k < coords.size(); ++k) {
      auto xs = inputs;
      const double saved = xs[i][coords[k]];
      xs[i][coords[k]] = saved + kFdStep;
      const double up = evaluate(xs, nullptr);
      xs[i][coords[k]] = saved - kFdStep;
      const double down = evaluate(xs, nullptr);
      n[k] = (up - down) / (2.0 * kFdStep);
      a[k] = analytic[i][coords[k]];
    }
    row.rel_error = std::max(row.rel_error, relative_error(a, n));
    row.coordinates += coords.size();
  }
  row.pass = row.rel_error < kGradcheckTolerance;
  return row;
}

// Full network loss with respect to sampled coordinates of every parameter.
GradcheckRow check_network(Variant variant, std::mt19937_64& rng)
{
  HisnConfig cfg = HisnConfig::toy();
  cfg.global_size = 32;
  cfg.variant = variant;
  cfg.seed = rng();
  HisnNetwork<double> net(cfg);
  // A generic point: zero biases and zero-initialized heads sit on ReLU kinks.
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& p : net.params()) {
    const bool all_zero = std::all_of(p.value.data().begin(), p.value.data().end(), [](double v) { return v == 0.0; });
    if (p.value.shape().rank() == 1 || all_zero)
      for (double& v : p.value.data())
        v = u(rng);
  }

  const auto samples = procedural_dataset(1, 32, rng(), 1.0);
  const auto batch = make_batch<double>(samples, kDefaultTau, MaskVariant::Default);

  auto evaluate = [&](std::vector<Tensor<double>>* grads) {
    Graph<double> g;
    const auto bound = net.params().bind(g);
    const auto out = net.forward(g, bound, g.constant(batch.ldr), g.constant(batch.mask));
    const auto l = build_loss(g, out, variant, g.constant(batch.dim), g.constant(batch.bright),
                              g.constant(batch.crf), 1.0, 5000.0);
    if (grads) {
      g.backward(l.total);
      for (NodeId id : bound)
        grads->push_back(g.grad(id));
    }
    return g.value(l.total)[0];
  };

  std::vector<Tensor<double>> analytic;
  evaluate(&analytic);
  GradcheckRow row{"loss/" + to_string(variant), 0.0, 0, true};
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    auto& value = net.params()[i].value;
    const auto coords = pick_coordinates(value.size(), 4, rng);
    Tensor<double> a(Shape{coords.size()}), n(Shape{coords.size()});
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const double saved = value[coords[k]];
      value[coords[k]] = saved + kFdStep;
      const double up = evaluate(nullptr);
      value[coords[k]] = saved - kFdStep;
      const double down = evaluate(nullptr);
      value[coords[k]] = saved;
      n[k] = (up - down) / (2.0 * kFdStep);
      a[k] = analytic[i][coords[k]];
    }
    row.rel_error = std::max(row.rel_error, relative_error(a, n));
    row.coordinates += coords.size();
  }
  row.pass = row.rel_error < kGradcheckTolerance;
  return row;
}

} // namespace

std::vector<GradcheckRow> run_gradcheck(std::uint64_t seed, const std::function<void(const GradcheckRow&)>& on_row)
{
  std::mt19937_64 rng(seed);
  std::vector<GradcheckRow> rows;
  auto record = [&](GradcheckRow r) {
    if (on_row)
      on_row(r);
    rows.push_back(std::move(r));
  };
  auto act = [&](Shape s) { return random_tensor(rng, std::move(s), -0.1, 0.1); };
  auto pos = [&](Shape s) { return random_tensor(rng, std::move(s), 0.01, 0.2); };

  for (const ConvParams& p : {k3s1p1d1, k3s1p2d2, k3s2p1d1, k4s1p0d1}) {
    const auto k = static_cast<std::size_t>(p.kernel);
    record(check_op("conv2d " + p.str(), {act({2, 3, 9, 8}), act({4, 3, k, k}), act({4})},
                    [p](Graph<double>& g, std::span<const NodeId> x) { return g.conv2d(x[0], x[1], x[2], p); }, rng));
  }
  const Shape fm{2, 3, 6, 6};
  record(check_op("relu", {act(fm)}, [](Graph<double>& g, std::span<const NodeId> x) { return g.relu(x[0]); }, rng));
  record(check_op("sigmoid", {act(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.sigmoid(x[0]); }, rng));
  record(check_op("avgpool", {act(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.avgpool(x[0], 2); }, rng));
  record(check_op("concat", {act({2, 2, 4, 4}), act({2, 3, 4, 4})},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.concat(x); }, rng));
  record(check_op("add", {act(fm), act(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.add(x[0], x[1]); }, rng));
  record(check_op("sub", {act(fm), act(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.sub(x[0], x[1]); }, rng));
  record(check_op("mul", {act(fm), act(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.mul(x[0], x[1]); }, rng));
  record(check_op("mul channel-broadcast", {act(fm), act({2, 1, 6, 6})},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.mul(x[0], x[1]); }, rng));
  record(check_op("add channel-broadcast", {act({2, 1, 6, 6}), act(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.add(x[0], x[1]); }, rng));
  record(check_op("tile", {act({2, 3, 1, 1})},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.tile(x[0], 3, 4); }, rng));
  record(check_op("min_scalar", {random_tensor(rng, fm, 0.5, 1.5)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.min_scalar(x[0], 1.0); }, rng));
  record(check_op("square", {act(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.square(x[0]); }, rng));
  record(check_op("sqrt", {pos(fm)}, [](Graph<double>& g, std::span<const NodeId> x) { return g.sqrt(x[0]); }, rng));
  record(check_op("mean", {act(fm)}, [](Graph<double>& g, std::span<const NodeId> x) { return g.mean(x[0]); }, rng));
  record(check_op("log_map", {pos(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return g.log_map(x[0], 5000.0); }, rng));
  record(check_op("modulate", {act(fm), pos(fm), pos(fm)},
                  [](Graph<double>& g, std::span<const NodeId> x) { return modulate(g, x[0], x[1], x[2], 1); }, rng));
  for (Variant v : {Variant::Default, Variant::ConfigA, Variant::ConfigB})
    record(check_network(v, rng));
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<fs::path> run_preview(const fs::path& hdr_path, const fs::path& out_dir,
                                  const std::vector<double>& exposures, const std::string& crf_source)
{
  const HdrImage h = read_hdr_image(hdr_path);
  h.validate();
  const auto curves = load_response_curves(crf_source);
  if (curves.empty())
    throw ConfigError("CRF source '" + crf_source + "' has no curves");
  fs::create_directories(out_dir);
  exposure_stack_preview(h, exposures, curves.front(), out_dir);
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < exposures.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "exposure_%02zu_t%g.png", i, exposures[i]);
    written.push_back(out_dir / name);
  }
  write_png(out_dir / "drago.png", drago_tonemap(h));
  written.push_back(out_dir / "drago.png");
  return written;
}

namespace {

// Min-max normalizes in place; returns false for a constant map (left all zero).
bool normalize(PlanarImage& img)
{
  auto d = img.data();
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  const double a = *lo, b = *hi;
  if (!(b > a)) {
    std::fill(d.begin(), d.end(), 0.0);
    return false;
  }
  for (double& v : d)
    v = (v - a) / (b - a);
  return true;
}

} // namespace

DumpSummary dump_activations(const HisnNetwork<float>& net, const LdrImage& ldr, const fs::path& out_dir,
                             double tau, MaskVariant variant)
{
  ldr.validate();
  fs::create_directories(out_dir);
  const Mask mask = apply_mask_variant(compute_mask(ldr, tau), variant, ldr);

  Graph<float> g;
  const auto bound = net.params().bind(g);
  const NodeId in = g.constant(to_tensor<float>(ldr));
  const NodeId m = g.constant(to_tensor<float>(mask));
  std::optional<NodeId> frame;
  const std::size_t gs = net.config().global_size;
  if (ldr.width() != gs || ldr.height() != gs)
    frame = g.constant(to_tensor<float>(resample_bilinear(ldr, gs, gs)));
  const auto out = net.forward(g, bound, in, m, {}, frame);

  DumpSummary summary;
  const std::size_t w = ldr.width(), h = ldr.height();
  for (std::size_t i = 0; i < out.modulation.size(); ++i) {
    const auto& gamma = g.value(out.modulation[i].gamma);
    const auto& beta = g.value(out.modulation[i].beta);
    const std::size_t channels = gamma.shape().c();
    for (std::size_t c = 0; c < channels; ++c) {
      char suffix[32];
      std::snprintf(suffix, sizeof(suffix), "s%zu_c%02zu", i + 1, c);
      for (const auto& [label, t] : {std::pair<const char*, const Tensor<float>*>{"gamma", &gamma}, {"beta", &beta}}) {
        PlanarImage map(w, h, 1);
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            map.at(0, y, x) = t->at(0, c, y, x);
        const std::string name = std::string(label) + "_" + suffix + ".png";
        if (!normalize(map))
          summary.notes.push_back(name + ": constant channel, written as zeros");
        write_png(out_dir / name, map);
        ++summary.grayscale;
      }
      PlanarImage product(w, h, 3);
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            product.at(k, y, x) = gamma.at(0, c, y, x) * ldr.at(k, y, x);
      const std::string name = std::string("gamma_l_") + suffix + ".png";
      if (!normalize(product))
        summary.notes.push_back(name + ": constant product, written as zeros");
      write_png(out_dir / name, product);
      ++summary.products;
    }
  }
  if (!summary.notes.empty()) {
    std::ofstream notes(out_dir / "notes.txt");
    for (const auto& n : summary.notes)
      notes << n << '\n';
  }
  return summary;
}

} // namespace itm
