#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "itm/pipeline.hpp"
#include "itm/response_curve.hpp"

using namespace itm;

namespace {

HdrImage constant_hdr(std::size_t w, std::size_t h, double v)
{
  return HdrImage(w, h, v);
}

LdrImage gradient_ldr(std::size_t w, std::size_t h)
{
  LdrImage l(w, h);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        l.at(c, y, x) = static_cast<double>(x + y * w + c) / static_cast<double>(w * h + 2);
  return l;
}

std::string dorf_text(std::size_t curves)
{
  std::ostringstream s;
  for (std::size_t k = 0; k < curves; ++k) {
    s << "curve" << k << ".tif\ngraph\nI =\n";
    for (int i = 0; i <= 10; ++i)
      s << i / 10.0 << (i < 10 ? ", " : "\n");
    s << "B =\n";
    const double g = 1.5 + static_cast<double>(k) / static_cast<double>(curves);
    for (int i = 0; i <= 10; ++i)
      s << std::pow(i / 10.0, 1.0 / g) << (i < 10 ? ", " : "\n");
  }
  return s.str();
}

} // namespace

TEST_CASE("clip_dynamic_range and residual")
{
  HdrImage h(3, 1);
  h.at(0, 0, 0) = 2.5;
  h.at(0, 0, 1) = 0.3;
  h.at(0, 0, 2) = 1.0;
  const auto c = clip_dynamic_range(h);
  CHECK(c.at(0, 0, 0) == 1.0);
  CHECK(c.at(0, 0, 1) == 0.3);
  CHECK(c.at(0, 0, 2) == 1.0);
  const auto r = clipped_residual(h);
  for (std::size_t i = 0; i < h.size(); ++i)
    CHECK(c.data()[i] + r.data()[i] == h.data()[i]);
  CHECK(r.at(0, 0, 0) == 1.5);
}

TEST_CASE("response curves")
{
  const auto id = ResponseCurve::identity();
  const auto l = gradient_ldr(5, 4);
  CHECK(apply_crf(l, id) == l);
  const auto g = ResponseCurve::gamma(2.2);
  CHECK(g(0.25) == doctest::Approx(std::pow(0.25, 1 / 2.2)).epsilon(1e-4));
  CHECK(g(0.25) == doctest::Approx(0.5326).epsilon(1e-3));
  for (const auto& f : gamma_family(5)) {
    CHECK(f(0.0) == 0.0);
    CHECK(f(1.0) == 1.0);
  }
}

TEST_CASE("DoRF parsing and the training split")
{
  std::istringstream in(dorf_text(201));
  const auto curves = read_dorf(in);
  CHECK(curves.size() == 201);
  CHECK(select_split(curves, CurveSplit::Train).size() == 171);
  CHECK(select_split(curves, CurveSplit::Test).size() == 30);
  CHECK(curves[0].name() == "curve0.tif");
  std::istringstream bad("name\nI = 0 0.5 1\n");
  CHECK_THROWS_AS(read_dorf(bad), InputError);
}

TEST_CASE("quantize8 lattice")
{
  CHECK(quantize8(0.0) == 0.0);
  CHECK(quantize8(1.0) == 1.0);
  CHECK(quantize8(0.5) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng);
    const double q = quantize8(v);
    CHECK(quantize8(q) == q);
    CHECK(std::abs(q - v) <= 1.0 / 510.0 + 1e-15);
  }
}

TEST_CASE("noise statistics")
{
  const LdrImage flat(1000, 1000, 0.5);
  CHECK(add_noise(flat, NoiseParams{0.0, 0.0, 7}) == flat);
  const auto noisy = add_noise(flat, NoiseParams{0.013, 0.005, 7});
  double mean = 0.0, var = 0.0;
  for (double v : noisy.data())
    mean += v;
  mean /= static_cast<double>(noisy.size());
  for (double v : noisy.data())
    var += (v - mean) * (v - mean);
  var /= static_cast<double>(noisy.size() - 1);
  const double expected = 0.5 * 0.013 * 0.013 + 0.005 * 0.005;
  CHECK(std::abs(var - expected) / expected < 0.05);

  const LdrImage black(64, 64, 0.0);
  const auto signal_only = add_noise(black, NoiseParams{0.013, 0.0, 3});
  CHECK(signal_only == black);
  CHECK(add_noise(flat, NoiseParams{0.013, 0.005, 7}) == noisy);
}

TEST_CASE("jpeg round trip")
{
  if (!jpeg_available()) {
    MESSAGE("built without libjpeg");
    return;
  }
  const LdrImage flat(32, 32, 0.4);
  const auto out = jpeg_round_trip(quantize8(flat), 100);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(std::abs(out.data()[i] - quantize8(0.4)) <= 1.0 / 255.0 + 1e-12);
    CHECK(quantize8(out.data()[i]) == out.data()[i]);
  }
}

TEST_CASE("exposure grid")
{
  const auto t = sample_exposures(60, -3, 3);
  REQUIRE(t.size() == 60);
  CHECK(t.front() == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(t.back() == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(sample_exposures(2, 0, 0) == std::vector<double>{1.0, 1.0});
  const auto three = sample_exposures(3, -1, 1);
  CHECK(three[0] == doctest::Approx(0.5));
  CHECK(three[1] == doctest::Approx(1.0));
  CHECK(three[2] == doctest::Approx(2.0));
}

TEST_CASE("synthesize_pair composition")
{
  SUBCASE("no clipping")
  {
    HdrImage h(8, 8);
    for (std::size_t i = 0; i < h.size(); ++i)
      h.data()[i] = 0.9 * static_cast<double>(i) / static_cast<double>(h.size());
    const auto p = synthesize_pair(h, 1.0, ResponseCurve::identity(), std::nullopt, std::nullopt);
    for (std::size_t i = 0; i < h.size(); ++i) {
      CHECK(p.ldr.data()[i] == quantize8(h.data()[i]));
      CHECK(p.bright_target.data()[i] == 0.0);
    }
  }
  SUBCASE("constant 4.0")
  {
    const auto p = synthesize_pair(constant_hdr(4, 4, 4.0), 1.0, ResponseCurve::identity(), std::nullopt, std::nullopt);
    for (std::size_t i = 0; i < p.ldr.size(); ++i) {
      CHECK(p.ldr.data()[i] == 1.0);
      CHECK(p.bright_target.data()[i] == 3.0);
    }
  }
  SUBCASE("deterministic under a seed")
  {
    const auto h = procedural_scene(4, 32, 32);
    const NoiseParams np{0.01, 0.003, 99};
    const auto a = synthesize_pair(h, 2.0, ResponseCurve::gamma(2.2), np, 90);
    const auto b = synthesize_pair(h, 2.0, ResponseCurve::gamma(2.2), np, 90);
    CHECK(a.ldr == b.ldr);
  }
}

TEST_CASE("naive expansion")
{
  LdrImage l(3, 1);
  l.at(0, 0, 0) = 0.0;
  l.at(0, 0, 1) = 0.5;
  l.at(0, 0, 2) = 1.0;
  const auto h = naive_expand(l);
  CHECK(h.at(0, 0, 0) == 0.0);
  CHECK(h.at(0, 0, 1) == doctest::Approx(0.25));
  CHECK(h.at(0, 0, 2) == 1.0);
  const auto g = naive_expand(gradient_ldr(6, 6));
  const auto src = gradient_ldr(6, 6);
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < src.size(); ++j)
      if (src.data()[i] <= src.data()[j])
        CHECK(g.data()[i] <= g.data()[j]);
}

TEST_CASE("pipeline config validation")
{
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  c.sigma_s_max = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.jpeg_quality_min = 101;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
