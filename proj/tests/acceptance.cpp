// Acceptance checks G1..G10. Prints one line per criterion and exits nonzero
// if any fails. Set ITM_ACCEPTANCE_ONLY=G3,G4 to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "itm/commands.hpp"
#include "itm/hdr_io.hpp"
#include "itm/metrics.hpp"
#include "itm/pipeline.hpp"

using namespace itm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------------------

Outcome g1()
{
  const auto t0 = Clock::now();
  std::size_t failed = 0;
  double worst = 0.0;
  std::string worst_name;
  const auto rows = run_gradcheck(0, [&](const GradcheckRow& r) {
    if (!r.pass)
      ++failed;
    if (r.rel_error >= worst) {
      worst = r.rel_error;
      worst_name = r.name;
    }
  });
  const double secs = seconds_since(t0);
  return {failed == 0 && secs < 120.0,
          fmt("%zu checks, %zu failed, max rel error %.2e (%s), %.1f s (limit 120 s)", rows.size(), failed, worst,
              worst_name.c_str(), secs)};
}

// The overfit run is shared by G2 and G6.
struct OverfitRun
{
  std::vector<TrainingSample> data;
  TrainConfig cfg;
  std::optional<TrainState> state;
  LossValue loss10;
  LossValue final_loss;
  double seconds = 0.0;
};

std::vector<TrainingSample> overfit_patches()
{
  std::vector<TrainingSample> data;
  const auto crf = ResponseCurve::identity();
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto h = procedural_scene(derive_seed(7, i), 64, 64);
    Provenance prov;
    prov.crf = crf.name();
    data.push_back(TrainingSample::from_pair(synthesize_pair(h, 1.0, crf, std::nullopt, std::nullopt), prov));
  }
  return data;
}

OverfitRun& overfit()
{
  static OverfitRun run = [] {
    OverfitRun r;
    r.data = overfit_patches();
    const RunConfig toy = RunConfig::toy();
    r.cfg = toy.train;
    TrainHooks hooks;
    hooks.on_iteration = [&](const LossLogRow&, const TrainState& st) {
      if (st.iteration == 10)
        r.loss10 = evaluate_loss(st.network, r.data, r.cfg);
      return true;
    };
    const auto t0 = Clock::now();
    auto result = train(r.data, toy.network, r.cfg, hooks);
    r.seconds = seconds_since(t0);
    r.final_loss = evaluate_loss(result.state.network, r.data, r.cfg);
    r.state.emplace(std::move(result.state));
    return r;
  }();
  return run;
}

Outcome g2()
{
  auto& r = overfit();
  const double ratio = r.final_loss.total / r.loss10.total;
  const double pu = dataset_pu_psnr(r.state->network, r.data, r.cfg);
  const bool pass = ratio < 0.01 && pu >= 35.0 && r.seconds < 600.0;
  return {pass, fmt("loss@10 %.5f, final %.5f, ratio %.4f (limit 0.01), PU-PSNR %.2f dB (limit 35), %zu iters at "
                    "batch %zu in %.0f s (limit 600 s)",
                    r.loss10.total, r.final_loss.total, ratio, pu, r.cfg.iterations, r.cfg.batch_size, r.seconds)};
}

Outcome g3()
{
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok)
      failures.push_back(what);
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  double worst_q = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = std::clamp(u(rng), 0.0, 1.0);
    const double q = quantize8(v);
    expect(quantize8(q) == q, "quantize8 idempotence");
    worst_q = std::max(worst_q, std::abs(q - v));
  }
  expect(worst_q <= 1.0 / 510.0 + 1e-12, "quantize8 error bound");

  HdrImage h(32, 32);
  for (auto& v : h.data())
    v = std::exp2(u(rng) * 6.0 - 2.0);
  const auto c = clip_dynamic_range(h);
  const auto r = clipped_residual(h);
  double identity_err = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    expect(c.data()[i] >= 0.0 && c.data()[i] <= 1.0, "clip range");
    identity_err = std::max(identity_err, std::abs(c.data()[i] + r.data()[i] - h.data()[i]));
  }
  expect(identity_err <= 1e-9, "decomposition identity");
  for (const auto& f : gamma_family(7)) {
    const auto mapped = apply_crf(c, f);
    for (double v : mapped.data())
      expect(v >= 0.0 && v <= 1.0, "CRF range");
    expect(f(0.0) == 0.0 && f(1.0) == 1.0, "CRF endpoints");
  }
  const auto q8 = quantize8(c);
  for (double v : q8.data())
    expect(std::abs(v * 255.0 - std::round(v * 255.0)) <= 1e-9, "quantize lattice");
  const auto t = sample_exposures(60, -3.0, 3.0);
  expect(t.size() == 60 && std::abs(t.front() - 0.125) <= 1e-9 && std::abs(t.back() - 8.0) <= 1e-9,
         "exposure endpoints");

  std::string detail = fmt("max quantize error %.6f (bound %.6f), identity error %.1e, t in [%.9g, %.9g]", worst_q,
                           1.0 / 510.0, identity_err, t.front(), t.back());
  if (!failures.empty())
    detail += "; failed: " + failures.front();
  return {failures.empty(), detail};
}

Outcome g4()
{
  LdrImage l(5, 1, 0.3);
  const double lightness[] = {0.95, 0.975, 1.0, 1.0 - 1e-12, 0.5};
  for (std::size_t x = 0; x < 5; ++x)
    l.at(2, 0, x) = lightness[x];
  const auto m = compute_mask(l, 0.95);
  const double e0 = std::abs(m.at(0, 0, 0) - 0.0);
  const double e1 = std::abs(m.at(0, 0, 1) - 0.5);
  const double e2 = std::abs(m.at(0, 0, 2) - 1.0);
  const bool eq3 = e0 <= 1e-6 && e1 <= 1e-6 && e2 <= 1e-6;

  const auto c = apply_mask_variant(m, MaskVariant::ConfigC, l);
  const auto d = apply_mask_variant(m, MaskVariant::ConfigD, l);
  const auto e = apply_mask_variant(m, MaskVariant::ConfigE, l);
  bool delta = c.at(0, 0, 2) > 0.0;
  for (std::size_t x : {0, 1, 4})
    delta = delta && c.at(0, 0, x) == 0.0;
  const bool zeros = std::all_of(d.data().begin(), d.data().end(), [](double v) { return v == 0.0; });
  const bool ones = std::all_of(e.data().begin(), e.data().end(), [](double v) { return v == 1.0; });
  return {eq3 && delta && zeros && ones,
          fmt("M(0.95)=%.7f M(0.975)=%.7f M(1.0)=%.7f; configC near-delta %s, configD all-zero %s, configE all-one %s",
              m.at(0, 0, 0), m.at(0, 0, 1), m.at(0, 0, 2), delta ? "yes" : "no", zeros ? "yes" : "no",
              ones ? "yes" : "no")};
}

Outcome g5()
{
  HisnConfig cfg = HisnConfig::toy();
  cfg.global_size = 32;
  cfg.seed = 5;
  HisnNetwork<double> net(cfg);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LdrImage ldr(32, 32);
  for (auto& v : ldr.data())
    v = u(rng);
  const Mask mask = compute_mask(ldr);

  auto forward = [&](const HisnNetwork<double>& n, const Mask& m, ForwardOptions opts) {
    Graph<double> g;
    const auto bound = n.params().bind(g);
    const auto out = n.forward(g, bound, g.constant(to_tensor<double>(ldr)), g.constant(to_tensor<double>(m)), opts);
    std::vector<Tensor<double>> mods;
    for (const auto& mod : out.modulation) {
      mods.push_back(g.value(mod.gamma));
      mods.push_back(g.value(mod.beta));
    }
    return std::make_pair(g.value(out.h), mods);
  };
  const bool identity = forward(net, mask, {true, false}).first == forward(net, mask, {false, true}).first;

  for (auto& p : net.params())
    if (p.name.rfind("lamn.", 0) == 0 && p.name.find(".bias") != std::string::npos)
      p.value.fill(0.0);
  const Mask zero(32, 32);
  const auto mods = forward(net, zero, {}).second;
  double peak = 0.0;
  for (const auto& t : mods)
    for (double v : t.data())
      peak = std::max(peak, std::abs(v));
  return {identity && peak == 0.0,
          fmt("zero-modulation output %s unmodulated output; max |gamma|,|beta| with zero mask and no LAMN bias = %g",
              identity ? "bitwise equals" : "DIFFERS from", peak)};
}

Outcome g6()
{
  auto& r = overfit();
  std::size_t patches = 0, passing = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& s : r.data) {
    const auto p = predict(r.state->network, s.ldr, r.cfg.tau, r.cfg.mask_variant);
    double in_sum = 0, out_sum = 0;
    std::size_t in_n = 0, out_n = 0;
    for (std::size_t y = 0; y < s.ldr.height(); ++y)
      for (std::size_t x = 0; x < s.ldr.width(); ++x) {
        const bool saturated = p.mask.at(0, y, x) > 0.0;
        for (std::size_t c = 0; c < 3; ++c)
          (saturated ? in_sum : out_sum) += p.h2.at(c, y, x);
        (saturated ? in_n : out_n) += 3;
      }
    if (in_n == 0)
      continue;
    ++patches;
    const double in_mean = in_sum / static_cast<double>(in_n);
    const double out_mean = out_n ? out_sum / static_cast<double>(out_n) : 0.0;
    const double ratio = out_mean > 0.0 ? in_mean / out_mean : std::numeric_limits<double>::infinity();
    worst = std::min(worst, ratio);
    passing += ratio > 10.0;
  }
  return {patches > 0 && passing == patches,
          fmt("%zu/%zu saturated patches with mean H2 inside M>0 over 10x outside; worst ratio %.1f", passing, patches,
              worst)};
}

Outcome g7()
{
  const auto data = overfit_patches();
  RunConfig base = RunConfig::toy();
  base.train.iterations = 500;
  std::vector<double> def, cfg_b;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (Variant v : {Variant::Default, Variant::ConfigB}) {
      RunConfig c = base;
      c.network.variant = v;
      c.network.seed = seed;
      c.train.seed = seed;
      const auto result = train(data, c.network, c.train);
      (v == Variant::Default ? def : cfg_b).push_back(evaluate_loss(result.state.network, data, c.train).total);
    }
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double md = median(def), mb = median(cfg_b);
  return {mb >= md, fmt("median final loss over seeds 1-3 at %zu iters: default %.5f, configB %.5f", base.train.iterations,
                        md, mb)};
}

Outcome g8()
{
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PlanarImage x(128, 128, 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 128; ++y)
      for (std::size_t i = 0; i < 128; ++i)
        x.at(c, y, i) = 0.5 + 0.25 * std::sin(0.21 * i + 0.13 * y + c) + 0.1 * u(rng);
  const double self_psnr = psnr(x, x);
  const double self_ssim = ssim(x, x);
  PlanarImage a(64, 64, 3, 0.2), b(64, 64, 3, 0.3);
  const double offset_psnr = psnr(a, b);
  std::vector<double> sweep;
  for (double sigma : {0.01, 0.05, 0.1}) {
    std::normal_distribution<double> n(0.0, sigma);
    PlanarImage y = x;
    for (auto& v : y.data())
      v = std::clamp(v + n(rng), 0.0, 1.0);
    sweep.push_back(ms_ssim(x, y));
  }
  const bool decreasing = sweep[0] > sweep[1] && sweep[1] > sweep[2];
  const bool pass = self_psnr == 99.0 && std::abs(self_ssim - 1.0) <= 1e-6 && std::abs(offset_psnr - 20.0) <= 1e-9 &&
                    decreasing;
  return {pass, fmt("psnr(x,x)=%g, ssim(x,x)=%.9f, offset-0.1 psnr=%.9f, ms-ssim sweep %.4f > %.4f > %.4f", self_psnr,
                    self_ssim, offset_psnr, sweep[0], sweep[1], sweep[2])};
}

Outcome g9()
{
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  HdrImage h(33, 17);
  for (auto& v : h.data())
    v = static_cast<double>(static_cast<float>(std::exp2(u(rng))));
  const bool pfm_exact = decode_pfm(encode_pfm(h)) == h;

  // Per channel relative to the value itself for grey pixels, and relative to
  // the pixel's largest channel otherwise (the shared exponent's resolution).
  HdrImage grey(40, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 40; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        grey.at(c, y, x) = std::exp2(static_cast<double>(x) / 4.0 - 5.0 + static_cast<double>(y));
  const auto gb = decode_hdr(encode_hdr(grey));
  double grey_rel = 0.0;
  for (std::size_t i = 0; i < grey.size(); ++i)
    grey_rel = std::max(grey_rel, std::abs(gb.data()[i] - grey.data()[i]) / grey.data()[i]);
  const auto hb = decode_hdr(encode_hdr(h));
  double color_rel = 0.0;
  for (std::size_t y = 0; y < h.height(); ++y)
    for (std::size_t x = 0; x < h.width(); ++x) {
      const double peak = std::max({h.at(0, y, x), h.at(1, y, x), h.at(2, y, x)});
      for (std::size_t c = 0; c < 3; ++c)
        color_rel = std::max(color_rel, std::abs(hb.at(c, y, x) - h.at(c, y, x)) / peak);
    }

  std::size_t rejected = 0, with_diagnostic = 0;
  const std::vector<std::string> bad = {"", "PF\n", "PF\n2 2\n-1.0\n\x01\x02", "P7\n1 1\n-1\n0000", "#?RADIANCE\n\n-Y 1 +X 1\n",
                                        "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 4 +X 4\n\x02\x02"};
  for (std::size_t i = 0; i < bad.size(); ++i) {
    const std::vector<std::uint8_t> bytes(bad[i].begin(), bad[i].end());
    try {
      if (bad[i].rfind("#?", 0) == 0)
        decode_hdr(bytes);
      else
        decode_pfm(bytes);
    } catch (const InputError& e) {
      ++rejected;
      with_diagnostic += std::string(e.what()).size() > 10;
    }
  }
  const bool pass = pfm_exact && grey_rel <= 1.0 / 256.0 && color_rel <= 1.0 / 256.0 && rejected == bad.size() &&
                    with_diagnostic == bad.size();
  return {pass, fmt("PFM bit-exact %s; RGBE max rel error %.5f grey, %.5f vs pixel max (bound %.5f); %zu/%zu malformed "
                    "inputs rejected with diagnostics",
                    pfm_exact ? "yes" : "no", grey_rel, color_rel, 1.0 / 256.0, rejected, bad.size())};
}

Outcome g10()
{
  const auto dir = fs::temp_directory_path() / "itm_acceptance_g10";
  fs::remove_all(dir);
  fs::create_directories(dir / "hdr");
  write_pfm(dir / "hdr" / "a.pfm", procedural_scene(1, 32, 32));
  write_pfm(dir / "hdr" / "b.pfm", procedural_scene(2, 32, 32));
  RunConfig cfg = RunConfig::toy();
  cfg.network.global_size = 32;
  cfg.network.width = 8;
  cfg.train.crop_size = 32;
  cfg.train.iterations = 20;
  cfg.train.batch_size = 2;
  cfg.pipeline.exposures = {0.5, 1.0, 2.0};
  cfg.pipeline.crf_source = "gamma-family:3";
  cfg.pipeline.jpeg = jpeg_available();
  for (const char* run : {"1", "2"}) {
    synthesize_dataset(cfg, dir / "hdr", dir / (std::string("data") + run), 11);
    run_training(cfg, dir / (std::string("data") + run), dir / (std::string("train") + run));
  }
  const auto m1 = slurp(dir / "data1" / kManifestName);
  const auto m2 = slurp(dir / "data2" / kManifestName);
  const auto l1 = slurp(dir / "train1" / "loss.csv");
  const auto l2 = slurp(dir / "train2" / "loss.csv");
  const auto c1 = slurp(dir / "train1" / "checkpoint.itmc");
  const auto c2 = slurp(dir / "train2" / "checkpoint.itmc");
  fs::remove_all(dir);
  const bool pass = !m1.empty() && m1 == m2 && !l1.empty() && l1 == l2 && c1 == c2;
  return {pass, fmt("manifest %zu bytes %s, loss log %zu bytes %s, checkpoint %s", m1.size(),
                    m1 == m2 ? "identical" : "DIFFERS", l1.size(), l1 == l2 ? "identical" : "DIFFERS",
                    c1 == c2 ? "identical" : "DIFFERS")};
}

} // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"G1", g1}, {"G2", g2}, {"G3", g3}, {"G4", g4}, {"G5", g5},
      {"G6", g6}, {"G7", g7}, {"G8", g8}, {"G9", g9}, {"G10", g10}};
  std::string only;
  if (const char* env = std::getenv("ITM_ACCEPTANCE_ONLY"))
    only = "," + std::string(env) + ",";

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && only.find("," + name + ",") == std::string::npos)
      continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%-4s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
