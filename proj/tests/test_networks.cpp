#include <doctest.h>

#include <filesystem>
#include <random>

#include "itm/commands.hpp"
#include "itm/hisn.hpp"
#include "itm/lamn.hpp"
#include "itm/png_io.hpp"

using namespace itm;

namespace {

std::size_t conv_count(std::size_t in, std::size_t out, std::size_t k)
{
  return out * in * k * k + out;
}

LdrImage random_ldr(std::size_t w, std::size_t h, std::uint64_t seed, double hi = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, hi);
  LdrImage l(w, h);
  for (auto& v : l.data())
    v = u(rng);
  return l;
}

template <typename T>
void zero_biases(ParameterSet<T>& params, const std::string& prefix)
{
  for (auto& p : params)
    if (p.name.rfind(prefix, 0) == 0 && p.name.size() > 5 && p.name.substr(p.name.size() - 5) == ".bias")
      p.value.fill(T(0));
}

struct Run
{
  Tensor<double> h1, h2, h3, h;
  std::vector<Tensor<double>> gamma, beta;
};

Run run(const HisnNetwork<double>& net, const LdrImage& ldr, const Mask& mask, ForwardOptions opts = {})
{
  Graph<double> g;
  const auto bound = net.params().bind(g);
  const auto out = net.forward(g, bound, g.constant(to_tensor<double>(ldr)), g.constant(to_tensor<double>(mask)), opts);
  Run r;
  if (net.config().variant != Variant::ConfigB) {
    r.h1 = g.value(out.h1);
    r.h2 = g.value(out.h2);
  }
  if (net.config().variant == Variant::ConfigA)
    r.h3 = g.value(out.h3);
  r.h = g.value(out.h);
  for (const auto& m : out.modulation) {
    r.gamma.push_back(g.value(m.gamma));
    r.beta.push_back(g.value(m.beta));
  }
  return r;
}

} // namespace

TEST_CASE("saturation mask")
{
  LdrImage l(3, 1);
  const double lightness[] = {0.95, 0.975, 1.0};
  for (std::size_t x = 0; x < 3; ++x) {
    l.at(0, 0, x) = 0.1;
    l.at(1, 0, x) = lightness[x];
    l.at(2, 0, x) = 0.2;
  }
  const auto m = compute_mask(l, 0.95);
  CHECK(m.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(m.at(0, 0, 1) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(m.at(0, 0, 2) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("modulate")
{
  Graph<double> g;
  const auto x = g.constant(Tensor<double>(Shape{1, 1, 1, 1}, 1.0));
  const auto gamma = g.constant(Tensor<double>(Shape{1, 1, 1, 1}, 0.5));
  const auto beta = g.constant(Tensor<double>(Shape{1, 1, 1, 1}, 0.1));
  CHECK(g.value(modulate(g, x, gamma, beta))[0] == doctest::Approx(1.6));
  const auto zero = g.constant(Tensor<double>(Shape{1, 1, 1, 1}));
  CHECK(g.value(modulate(g, x, zero, zero))[0] == 1.0);
  const auto wrong = g.constant(Tensor<double>(Shape{1, 2, 1, 1}));
  CHECK_THROWS(modulate(g, x, wrong, zero, 3));
}

TEST_CASE("LAMN output is nonnegative and vanishes for a zero mask without biases")
{
  ParameterSet<double> params;
  std::mt19937_64 rng(1);
  const auto layout = build_lamn(params, 6, 8, rng);
  CHECK(layout.stages() == 6);
  for (auto& p : params)
    if (p.name.find(".bias") != std::string::npos) {
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      for (auto& v : p.value.data())
        v = u(rng);
    }
  const Mask m = compute_mask(random_ldr(12, 10, 4), 0.95);
  Graph<double> g;
  auto bound = params.bind(g);
  for (const auto& mod : lamn_forward(g, bound, layout, g.constant(to_tensor<double>(m))))
    for (const auto id : {mod.gamma, mod.beta})
      for (double v : g.value(id).data())
        CHECK(v >= 0.0);

  zero_biases(params, "lamn.");
  Graph<double> g2;
  bound = params.bind(g2);
  for (const auto& mod : lamn_forward(g2, bound, layout, g2.constant(Tensor<double>(Shape{1, 1, 10, 12}))))
    for (const auto id : {mod.gamma, mod.beta})
      CHECK(g2.value(id) == Tensor<double>(g2.value(id).shape()));
}

TEST_CASE("toy parameter count matches the layer list")
{
  const HisnConfig cfg = HisnConfig::toy();
  const std::size_t c = cfg.width;
  std::size_t expected = 0;
  expected += conv_count(3, c, 3) + conv_count(c, c, 3);                          // local
  expected += conv_count(3, c, 3) + 3 * conv_count(c, c, 3);                      // dilation
  expected += conv_count(3, c, 3) + 3 * conv_count(c, c, 3) + conv_count(c, c, 4); // global 64 -> 4 -> 1
  expected += conv_count(3 * c, c, 3) + 4 * conv_count(c, c, 3);                  // fusion
  expected += conv_count(c, 3, 3);                                                // H1
  expected += 6 * conv_count(c, c, 3) + conv_count(c, 3, 3);                      // bright path, H2
  expected += 2 * (conv_count(1, c, 3) + 5 * conv_count(c, c, 3));                // LAMN
  CHECK(expected == 76214);
  HisnNetwork<float> net(cfg);
  CHECK(net.params().scalar_count() == expected);
  CHECK(cfg.global_reductions() == 4);
}

TEST_CASE("network construction is seeded")
{
  HisnConfig cfg = HisnConfig::toy();
  cfg.seed = 42;
  HisnNetwork<float> a(cfg), b(cfg);
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i].value == b.params()[i].value);
  cfg.seed = 43;
  HisnNetwork<float> c(cfg);
  CHECK_FALSE(a.params()[0].value == c.params()[0].value);
}

TEST_CASE("variant B has a single direct head")
{
  HisnConfig cfg = HisnConfig::toy();
  cfg.variant = Variant::ConfigB;
  HisnNetwork<float> net(cfg);
  CHECK_NOTHROW(net.params().find("direct_head.weight"));
  CHECK_THROWS(net.params().find("h1_head.weight"));
  CHECK_THROWS(net.params().find("h2_head.weight"));
}

TEST_CASE("config validation names admissible global sizes")
{
  HisnConfig cfg = HisnConfig::toy();
  cfg.global_size = 48;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("64") != std::string::npos);
  }
}

TEST_CASE("forward shapes and head ranges")
{
  HisnConfig cfg = HisnConfig::toy();
  cfg.global_size = 32;
  cfg.seed = 3;
  HisnNetwork<double> net(cfg);
  // Give the zero-initialized ReLU head random weights so its range is exercised.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.2);
  for (auto& v : net.params()[net.params().find("h2_head.weight")].value.data())
    v = n(rng);
  const auto ldr = random_ldr(32, 32, 5);
  const auto r = run(net, ldr, compute_mask(ldr));
  CHECK(r.h1.shape() == Shape{1, 3, 32, 32});
  CHECK(r.h2.shape() == Shape{1, 3, 32, 32});
  CHECK(r.h.shape() == Shape{1, 3, 32, 32});
  for (double v : r.h1.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (double v : r.h2.data())
    CHECK(v >= 0.0);
  for (std::size_t i = 0; i < r.h.size(); ++i)
    CHECK(r.h.data()[i] == doctest::Approx(r.h1.data()[i] + r.h2.data()[i]));
  CHECK(r.gamma.size() == 6);
}

TEST_CASE("zero modulation equals the unmodulated pathway")
{
  HisnConfig cfg = HisnConfig::toy();
  cfg.global_size = 16;
  HisnNetwork<double> net(cfg);
  const auto ldr = random_ldr(16, 16, 2);
  const auto m = compute_mask(ldr);
  const auto zero = run(net, ldr, m, ForwardOptions{true, false});
  const auto plain = run(net, ldr, m, ForwardOptions{false, true});
  CHECK(zero.h2 == plain.h2);
  CHECK(zero.h == plain.h);
}

TEST_CASE("config A head ranges")
{
  HisnConfig cfg = HisnConfig::toy();
  cfg.global_size = 16;
  cfg.variant = Variant::ConfigA;
  HisnNetwork<double> net(cfg);
  const auto ldr = random_ldr(16, 16, 6);
  const auto r = run(net, ldr, compute_mask(ldr));
  for (const auto* t : {&r.h1, &r.h2})
    for (double v : t->data()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  for (double v : r.h3.data()) {
    CHECK(v >= 0.0);
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("activation dump")
{
  const auto dir = std::filesystem::temp_directory_path() / "itm_test_dump";
  std::filesystem::remove_all(dir);
  HisnConfig cfg = HisnConfig::toy();
  cfg.width = 4;
  cfg.global_size = 16;
  HisnNetwork<float> net(cfg);
  const auto ldr = random_ldr(16, 16, 12);
  const auto s = dump_activations(net, ldr, dir);
  CHECK(s.grayscale == 2 * 6 * 4);
  CHECK(s.products == 6 * 4);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    files += e.path().extension() == ".png";
  CHECK(files == 3 * 6 * 4);
  // Every non-constant map spans the full 8-bit range.
  const auto gamma = read_png(dir / "gamma_s1_c00.png");
  double lo = 1, hi = 0;
  for (double v : gamma.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK((hi == 0.0 || (lo == 0.0 && hi == 1.0)));

  // A dark image has an all-zero mask; with zero LAMN biases every map is black.
  zero_biases(net.params(), "lamn.");
  const auto dark = random_ldr(16, 16, 13, 0.5);
  const auto dark_dir = dir / "dark";
  const auto d = dump_activations(net, dark, dark_dir);
  CHECK(d.notes.size() == d.grayscale + d.products);
  const auto beta = read_png(dark_dir / "beta_s6_c03.png");
  for (double v : beta.data())
    CHECK(v == 0.0);
  std::filesystem::remove_all(dir);
}
