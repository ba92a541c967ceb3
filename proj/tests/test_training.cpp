#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "itm/checkpoint.hpp"
#include "itm/commands.hpp"
#include "itm/config.hpp"
#include "itm/hdr_io.hpp"
#include "itm/training.hpp"

using namespace itm;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config()
{
  RunConfig c = RunConfig::toy();
  c.network.width = 4;
  c.network.global_size = 16;
  c.train.crop_size = 16;
  c.train.batch_size = 2;
  c.train.iterations = 6;
  c.train.learning_rate = 1e-3;
  return c;
}

TrainingSample sample_with(const HdrImage& exposed)
{
  SynthesizedPair p = synthesize_pair(exposed, 1.0, ResponseCurve::identity(), std::nullopt, std::nullopt);
  return TrainingSample::from_pair(p, Provenance{});
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("log-domain map")
{
  CHECK(log_map(0.0, 5000.0) == 0.0);
  CHECK(log_map(1.0, 5000.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(log_map(0.1, 5000.0) == doctest::Approx(std::log(501.0) / std::log(5001.0)).epsilon(1e-12));
  CHECK(log_map(0.1, 5000.0) == doctest::Approx(0.7299).epsilon(1e-4));
}

TEST_CASE("loss on plain images")
{
  HdrImage exposed(2, 2, 0.4);
  exposed.at(1, 1, 1) = 3.0;
  const auto s = sample_with(exposed);
  HdrImage h1(2, 2), h2(2, 2);
  std::copy(s.dim_target.data().begin(), s.dim_target.data().end(), h1.data().begin());
  std::copy(s.bright_target.data().begin(), s.bright_target.data().end(), h2.data().begin());
  CHECK(loss(h1, h2, s, 1.0, 5000.0).total == 0.0);

  HdrImage off = h1;
  for (auto& v : off.data())
    v += 0.1;
  const auto l = loss(off, h2, s, 1.0, 5000.0);
  CHECK(l.total == doctest::Approx(0.1).epsilon(1e-12));

  HdrImage wrong_h2 = h2;
  wrong_h2.at(0, 0, 0) = 0.5;
  const auto a = loss(off, wrong_h2, s, 1.0, 5000.0);
  const auto b = loss(off, wrong_h2, s, 2.0, 5000.0);
  CHECK(b.term1 == a.term1);
  CHECK(b.total - a.total == doctest::Approx(a.term2).epsilon(1e-12));
}

TEST_CASE("graph loss agrees with the image loss")
{
  const auto data = procedural_dataset(1, 16, 4, 2.0);
  HisnConfig cfg = HisnConfig::toy();
  cfg.width = 4;
  cfg.global_size = 16;
  HisnNetwork<float> net(cfg);
  const auto p = predict(net, data[0].ldr);
  const auto ref = loss(p.h1, p.h2, data[0], 1.0, 5000.0);
  TrainConfig tc;
  tc.crop_size = 16;
  const auto got = evaluate_loss(net, data, tc);
  CHECK(got.term1 == doctest::Approx(ref.term1).epsilon(1e-4));
  CHECK(got.term2 == doctest::Approx(ref.term2).epsilon(1e-4));
}

TEST_CASE("mask variants")
{
  LdrImage l(4, 1, 0.5);
  l.at(0, 0, 0) = 1.0;
  l.at(0, 0, 1) = 0.99;
  l.at(0, 0, 2) = 1.0 - 1e-12;
  const Mask m = compute_mask(l);
  const auto c = apply_mask_variant(m, MaskVariant::ConfigC, l);
  CHECK(c.at(0, 0, 0) > 0.0);
  CHECK(c.at(0, 0, 1) == 0.0);
  CHECK(c.at(0, 0, 3) == 0.0);
  const auto d = apply_mask_variant(m, MaskVariant::ConfigD, l);
  for (double v : d.data())
    CHECK(v == 0.0);
  const auto e = apply_mask_variant(m, MaskVariant::ConfigE, l);
  for (double v : e.data())
    CHECK(v == 1.0);
  CHECK(apply_mask_variant(m, MaskVariant::Default, l) == m);
  CHECK(parse_mask_variant("D") == MaskVariant::ConfigD);
  CHECK(parse_mask_variant("configE") == MaskVariant::ConfigE);
  CHECK_THROWS_AS(parse_mask_variant("F"), ConfigError);
}

TEST_CASE("config D batches carry an all-zero mask")
{
  const auto data = procedural_dataset(2, 16, 1, 4.0);
  const auto batch = make_batch<float>(data, kDefaultTau, MaskVariant::ConfigD);
  for (float v : batch.mask.data())
    CHECK(v == 0.0f);
  const auto normal = make_batch<float>(data, kDefaultTau, MaskVariant::Default);
  CHECK(*std::max_element(normal.mask.data().begin(), normal.mask.data().end()) > 0.0f);
}

TEST_CASE("learning rate schedule")
{
  TrainConfig c;
  CHECK(c.learning_rate_at(0) == 1e-4);
  CHECK(c.learning_rate_at(4999) == 1e-4);
  CHECK(c.learning_rate_at(5000) == doctest::Approx(0.9e-4));
  CHECK(c.learning_rate_at(10000) == doctest::Approx(0.81e-4));
}

TEST_CASE("training is deterministic and resumable")
{
  const auto cfg = tiny_config();
  const auto data = procedural_dataset(3, 24, 9, 2.0);
  const auto a = train(data, cfg.network, cfg.train);
  const auto b = train(data, cfg.network, cfg.train);
  REQUIRE(a.log.size() == 6);
  for (std::size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].loss.total == b.log[i].loss.total);

  TrainConfig half = cfg.train;
  half.iterations = 3;
  auto first = train(data, cfg.network, half);
  const auto rest = train(data, std::move(first.state), cfg.train);
  REQUIRE(rest.log.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(rest.log[i].loss.total == a.log[i + 3].loss.total);
}

TEST_CASE("training rejects crops larger than the samples")
{
  auto cfg = tiny_config();
  const auto data = procedural_dataset(1, 8, 1);
  CHECK_THROWS(train(data, cfg.network, cfg.train));
}

TEST_CASE("resample_bilinear keeps constants and corners")
{
  LdrImage flat(10, 7, 0.25);
  const auto up = resample_bilinear(flat, 16, 16);
  for (double v : up.data())
    CHECK(v == doctest::Approx(0.25));
  const auto same = resample_bilinear(flat, 10, 7);
  CHECK(same == flat);
}

TEST_CASE("run config JSON")
{
  const RunConfig c = RunConfig::toy();
  const auto j = to_json(c);
  const auto back = run_config_from_json(j);
  CHECK(to_json(back) == j);

  auto unknown = j;
  unknown["network"]["depth"] = 3;
  CHECK_THROWS_AS(run_config_from_json(unknown), ConfigError);
  auto version = j;
  version["schema_version"] = 2;
  CHECK_THROWS_AS(run_config_from_json(version).validate(), ConfigError);
  auto missing = j;
  missing.erase("schema_version");
  CHECK_THROWS_AS(run_config_from_json(missing), ConfigError);
  auto typed = j;
  typed["train"]["iterations"] = "many";
  CHECK_THROWS_AS(run_config_from_json(typed), ConfigError);
  auto mismatch = j;
  mismatch["train"]["crop_size"] = 32;
  CHECK_THROWS_AS(run_config_from_json(mismatch).validate(), ConfigError);
}

TEST_CASE("checkpoint round trip and corruption")
{
  const auto dir = fs::temp_directory_path() / "itm_test_ckpt";
  fs::create_directories(dir);
  const auto cfg = tiny_config();
  const auto data = procedural_dataset(2, 16, 2, 2.0);
  auto result = train(data, cfg.network, cfg.train);
  const auto path = dir / "a.itmc";
  save_checkpoint(path, result.state, to_json(cfg));
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.state.iteration == result.state.iteration);
  CHECK(loaded.state.adam.step == result.state.adam.step);
  for (std::size_t i = 0; i < loaded.state.network.params().size(); ++i) {
    CHECK(loaded.state.network.params()[i].value == result.state.network.params()[i].value);
    CHECK(loaded.state.adam.m[i] == result.state.adam.m[i]);
  }
  CHECK(loaded.echo == to_json(cfg));
  save_checkpoint(dir / "b.itmc", loaded.state, loaded.echo);
  CHECK(slurp(path) == slurp(dir / "b.itmc"));

  std::string bytes = slurp(path);
  {
    std::ofstream(dir / "trunc.itmc", std::ios::binary) << bytes.substr(0, bytes.size() - 16);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "trunc.itmc"), InputError);
  bytes[0] = 'X';
  {
    std::ofstream(dir / "magic.itmc", std::ios::binary) << bytes;
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.itmc"), InputError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.itmc"), InputError);
  fs::remove_all(dir);
}

TEST_CASE("synthesized dataset round trip")
{
  const auto dir = fs::temp_directory_path() / "itm_test_synth";
  fs::remove_all(dir);
  fs::create_directories(dir / "hdr");
  write_pfm(dir / "hdr" / "a.pfm", procedural_scene(1, 24, 24));
  write_hdr(dir / "hdr" / "b.hdr", procedural_scene(2, 24, 24));
  RunConfig cfg = tiny_config();
  cfg.pipeline.exposures = {0.5, 1.0, 2.0};
  cfg.pipeline.crf_source = "gamma-family:2";
  const auto s = synthesize_dataset(cfg, dir / "hdr", dir / "out1", 5);
  CHECK(s.sources == 2);
  CHECK(s.pairs == 12);
  synthesize_dataset(cfg, dir / "hdr", dir / "out2", 5);
  CHECK(slurp(dir / "out1" / kManifestName) == slurp(dir / "out2" / kManifestName));
  CHECK(slurp(dir / "out1" / "00007_b_ldr.png") == slurp(dir / "out2" / "00007_b_ldr.png"));

  const auto data = load_dataset(dir / "out1");
  REQUIRE(data.size() == 12);
  CHECK(data[0].ldr.width() == 24);
  CHECK(data[3].provenance.exposure == 1.0);

  fs::create_directories(dir / "empty");
  CHECK_THROWS_AS(synthesize_dataset(cfg, dir / "empty", dir / "out3", 0), InputError);
  {
    std::ofstream(dir / "hdr" / "c.hdr") << "not an image";
  }
  try {
    synthesize_dataset(cfg, dir / "hdr", dir / "out4", 0);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("c.hdr") != std::string::npos);
  }
  fs::remove_all(dir);
}
