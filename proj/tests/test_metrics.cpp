#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "itm/hdr_io.hpp"
#include "itm/metrics.hpp"
#include "itm/pipeline.hpp"

using namespace itm;
namespace fs = std::filesystem;

namespace {

PlanarImage textured(std::size_t w, std::size_t h, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PlanarImage img(w, h, 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        img.at(c, y, x) = 0.5 + 0.3 * std::sin(0.3 * x + 0.2 * y + c) + 0.1 * u(rng);
  return img;
}

PlanarImage with_noise(const PlanarImage& src, double sigma, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  PlanarImage out = src;
  for (auto& v : out.data())
    v = std::clamp(v + n(rng), 0.0, 1.0);
  return out;
}

} // namespace

TEST_CASE("PU curve shape")
{
  CHECK(pu_curve(kPuMinLuminance) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pu_curve(kPuMaxLuminance) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pu_curve(1e-6) == pu_curve(kPuMinLuminance));
  CHECK(pu_curve(1e6) == pu_curve(kPuMaxLuminance));
  double prev = -1.0;
  for (double l = 0.005; l < 1e4; l *= 1.3) {
    const double v = pu_curve(l);
    CHECK(v > prev);
    prev = v;
  }
  // Above ~80 cd/m^2 the threshold is Weber-like (tvi proportional to L), so
  // the response is linear in log luminance: equal steps per decade.
  const double d1 = pu_curve(1000.0) - pu_curve(100.0);
  const double d2 = pu_curve(10000.0) - pu_curve(1000.0);
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-3));
}

TEST_CASE("PU anchoring")
{
  HdrImage h(100, 10);
  for (std::size_t i = 0; i < h.size(); ++i)
    h.data()[i] = static_cast<double>(i + 1) / 100.0;
  CHECK(percentile(h, 100.0) == h.max_value());
  CHECK(percentile(h, 50.0) == doctest::Approx(15.0));
  const auto a = make_anchor(h);
  CHECK(a.scale * a.reference_value == doctest::Approx(kAnchorLuminance));
  CHECK(a.reference_value == doctest::Approx(29.97));
  CHECK_THROWS_AS(make_anchor(HdrImage(4, 4)), InputError);

  const auto pu = pu_encode(h, a);
  const auto again = pu_encode(h, h);
  CHECK(pu.data().size() == again.data().size());
  CHECK(std::equal(pu.data().begin(), pu.data().end(), again.data().begin()));
  // The anchor value itself lands on pu(1000).
  HdrImage one(1, 1, a.reference_value);
  CHECK(pu_encode(one, a).data()[0] == doctest::Approx(pu_curve(1000.0)));
  // Pixelwise order is preserved.
  for (std::size_t i = 1; i < h.size(); ++i)
    CHECK(pu.data()[i] >= pu.data()[i - 1]);
}

TEST_CASE("PSNR")
{
  const auto x = textured(32, 32, 1);
  CHECK(psnr(x, x) == kPsnrCapDb);
  PlanarImage a(16, 16, 3, 0.3), b(16, 16, 3, 0.4);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
  for (int trial = 0; trial < 10; ++trial) {
    const auto n1 = with_noise(x, 0.02, 100 + trial);
    const auto n2 = with_noise(x, 0.08, 200 + trial);
    CHECK(psnr(x, n1) > psnr(x, n2));
  }
}

TEST_CASE("SSIM and MS-SSIM")
{
  const auto x = textured(96, 96, 2);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-6));
  PlanarImage inv = x;
  for (auto& v : inv.data())
    v = 1.0 - v;
  CHECK(ssim(x, inv) < ssim(x, x));
  CHECK(ms_ssim(x, x) == doctest::Approx(1.0).epsilon(1e-6));
  double prev = 1.0;
  for (double sigma : {0.01, 0.05, 0.1}) {
    const double v = ms_ssim(x, with_noise(x, sigma, 7));
    CHECK(v < prev);
    prev = v;
  }
  CHECK(ms_ssim_scales(256) == 5);
  CHECK(ms_ssim_scales(64) == 3);
  CHECK(ms_ssim_scales(11) == 1);
  CHECK_THROWS(ssim(PlanarImage(8, 8, 3), PlanarImage(8, 8, 3)));
}

TEST_CASE("directory evaluation")
{
  const auto dir = fs::temp_directory_path() / "itm_test_eval";
  fs::remove_all(dir);
  fs::create_directories(dir / "ref");
  fs::create_directories(dir / "pred");
  fs::create_directories(dir / "naive");
  fs::create_directories(dir / "other");
  for (int i = 0; i < 3; ++i) {
    const auto h = procedural_scene(10 + i, 48, 48);
    const auto name = "s" + std::to_string(i);
    write_pfm(dir / "ref" / (name + ".pfm"), h);
    write_pfm(dir / "pred" / (name + ".pfm"), h);
    const auto pair = synthesize_pair(h, 1.0, ResponseCurve::identity(), std::nullopt, std::nullopt);
    write_pfm(dir / "naive" / (name + ".pfm"), naive_expand(pair.ldr));
  }
  write_pfm(dir / "other" / "zzz.pfm", procedural_scene(1, 48, 48));

  const auto self = evaluate(dir / "pred", dir / "ref", dir / "self.csv");
  REQUIRE(self.rows.size() == 3);
  for (const auto& r : self.rows) {
    CHECK(r.pu_psnr_db == kPsnrCapDb);
    CHECK(r.pu_ssim == doctest::Approx(1.0));
  }
  CHECK(fs::exists(dir / "self.csv"));
  CHECK(fs::exists(dir / "self.csv.json"));

  const auto naive = evaluate(dir / "naive", dir / "ref", dir / "naive.csv");
  CHECK(naive.mean.pu_psnr_db < self.mean.pu_psnr_db);
  CHECK(naive.mean.pu_ssim < self.mean.pu_ssim);

  CHECK_THROWS_AS(evaluate(dir / "other", dir / "ref", dir / "none.csv"), InputError);
  CHECK_FALSE(fs::exists(dir / "none.csv"));
  fs::remove_all(dir);
}
