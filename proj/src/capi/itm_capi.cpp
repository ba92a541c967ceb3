// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/itm.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include <json.hpp>

#include "itm/checkpoint.hpp"
#include "itm/commands.hpp"
#include "itm/hdr_io.hpp"
#include "itm/png_io.hpp"
#include "itm/tonemap.hpp"

struct itm_image
{
  itm::PlanarImage image;
};

struct itm_config
{
  itm::RunConfig config;
};

struct itm_model
{
  itm::HisnNetwork<float> network;
  itm::InferenceSettings settings;
};

namespace {

thread_local std::string g_last_error;

itm_status fail(itm_status status, std::string message)
{
  g_last_error = std::move(message);
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
itm_status guarded(Fn&& fn) noexcept
{
  try {
    g_last_error.clear();
    fn();
    return ITM_OK;
  } catch (const itm::Error& e) {
    return fail(static_cast<itm_status>(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ITM_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ITM_ERR_RUNTIME, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ITM_ERR_RUNTIME, e.what());
  } catch (const std::exception& e) {
    return fail(ITM_ERR_RUNTIME, e.what());
  }
}

void require(const void* p, const char* what)
{
  if (p == nullptr)
    throw itm::ConfigError(std::string(what) + " must not be NULL");
}

std::string lower_extension(const char* path)
{
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

bool is_ldr_extension(const std::string& ext)
{
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

template <typename Out>
Out convert(const itm::PlanarImage& src)
{
  if (src.channels() != 3)
    throw itm::InputError("expected a 3-channel image, got " + std::to_string(src.channels()));
  Out out(src.width(), src.height());
  std::copy(src.data().begin(), src.data().end(), out.data().begin());
  return out;
}

char* copy_string(const std::string& s)
{
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

itm_metrics to_c(const itm::MetricRow& r, std::size_t pairs)
{
  return itm_metrics{pairs, r.pu_psnr_db, r.pu_ssim, r.pu_ms_ssim};
}

} // namespace

extern "C" {

const char* itm_version(void)
{
  return "1.0.0";
}

const char* itm_last_error(void)
{
  return g_last_error.c_str();
}

void itm_string_free(char* s)
{
  delete[] s;
}

// ---- configuration --------------------------------------------------------

itm_status itm_config_create(int toy, itm_config** out)
{
  return guarded([&] {
    require(out, "out");
    *out = new itm_config{toy ? itm::RunConfig::toy() : itm::RunConfig{}};
  });
}

itm_status itm_config_load(const char* path, int toy, itm_config** out)
{
  return guarded([&] {
    require(out, "out");
    const itm::RunConfig base = toy ? itm::RunConfig::toy() : itm::RunConfig{};
    std::optional<std::filesystem::path> p;
    if (path != nullptr)
      p = path;
    auto cfg = itm::resolve_run_config(p, base);
    cfg.validate();
    *out = new itm_config{std::move(cfg)};
  });
}

itm_status itm_config_merge_json(itm_config* cfg, const char* json)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(json, "json");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      throw itm::ConfigError(std::string("config override is not valid JSON: ") + e.what());
    }
    if (!j.contains("schema_version"))
      j["schema_version"] = itm::kSchemaVersion;
    auto merged = itm::run_config_from_json(j, cfg->config);
    merged.validate();
    cfg->config = std::move(merged);
  });
}

itm_status itm_config_set_seed(itm_config* cfg, uint64_t seed)
{
  return guarded([&] {
    require(cfg, "cfg");
    cfg->config.network.seed = seed;
    cfg->config.train.seed = seed;
    cfg->config.pipeline.seed = seed;
  });
}

itm_status itm_config_to_json(const itm_config* cfg, char** out)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = copy_string(itm::to_json(cfg->config).dump(2));
  });
}

void itm_config_free(itm_config* cfg)
{
  delete cfg;
}

// ---- images ---------------------------------------------------------------

itm_status itm_image_read(const char* path, itm_image** out)
{
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    if (is_ldr_extension(lower_extension(path)))
      *out = new itm_image{itm::read_ldr_image(path)};
    else
      *out = new itm_image{itm::read_hdr_image(path)};
  });
}

itm_status itm_image_write(const itm_image* img, const char* path)
{
  return guarded([&] {
    require(img, "img");
    require(path, "path");
    const auto ext = lower_extension(path);
    if (ext == ".png")
      itm::write_png(path, img->image);
    else if (ext == ".hdr" || ext == ".pfm")
      itm::write_hdr_image(path, convert<itm::HdrImage>(img->image));
    else
      throw itm::ConfigError("cannot write '" + ext + "' files; use .hdr, .pfm or .png");
  });
}

itm_status itm_image_create(size_t width, size_t height, size_t channels, const double* data, itm_image** out)
{
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    if (width == 0 || height == 0 || (channels != 1 && channels != 3))
      throw itm::ConfigError("image must be non-empty with 1 or 3 channels");
    itm::PlanarImage img(width, height, channels);
    std::copy(data, data + img.size(), img.data().begin());
    *out = new itm_image{std::move(img)};
  });
}

size_t itm_image_width(const itm_image* img)
{
  return img ? img->image.width() : 0;
}

size_t itm_image_height(const itm_image* img)
{
  return img ? img->image.height() : 0;
}

size_t itm_image_channels(const itm_image* img)
{
  return img ? img->image.channels() : 0;
}

const double* itm_image_data(const itm_image* img)
{
  return img ? img->image.data().data() : nullptr;
}

void itm_image_free(itm_image* img)
{
  delete img;
}

// ---- models ---------------------------------------------------------------

itm_status itm_model_create(const itm_config* cfg, itm_model** out)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    cfg->config.network.validate();
    itm::InferenceSettings s{cfg->config.train.tau, cfg->config.train.mask_variant};
    *out = new itm_model{itm::HisnNetwork<float>(cfg->config.network), s};
  });
}

itm_status itm_model_load(const char* checkpoint, itm_model** out)
{
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    auto loaded = itm::load_checkpoint(checkpoint);
    const auto settings = itm::inference_settings(loaded.echo);
    *out = new itm_model{std::move(loaded.state.network), settings};
  });
}

itm_status itm_model_param_count(const itm_model* model, size_t* out)
{
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    std::size_t n = 0;
    for (const auto& p : model->network.params())
      n += p.value.size();
    *out = n;
  });
}

itm_status itm_model_predict(const itm_model* model, const itm_image* ldr, itm_image** hdr_out, itm_image** mask_out)
{
  return guarded([&] {
    require(model, "model");
    require(ldr, "ldr");
    require(hdr_out, "hdr_out");
    const auto in = convert<itm::LdrImage>(ldr->image);
    auto p = itm::predict(model->network, in, model->settings.tau, model->settings.mask_variant);
    *hdr_out = new itm_image{std::move(p.h)};
    if (mask_out != nullptr)
      *mask_out = new itm_image{std::move(p.mask)};
  });
}

void itm_model_free(itm_model* model)
{
  delete model;
}

// ---- commands -------------------------------------------------------------

itm_status itm_synth(const itm_config* cfg, const char* hdr_dir, const char* out_dir, uint64_t seed, size_t* pairs_out)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(hdr_dir, "hdr_dir");
    require(out_dir, "out_dir");
    const auto s = itm::synthesize_dataset(cfg->config, hdr_dir, out_dir, seed);
    if (pairs_out != nullptr)
      *pairs_out = s.pairs;
  });
}

itm_status itm_train(const itm_config* cfg, const char* data_dir, const char* out_dir, const char* resume,
                     itm_progress_fn progress, void* user, itm_train_result* result)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(data_dir, "data_dir");
    require(out_dir, "out_dir");
    std::optional<std::filesystem::path> r;
    if (resume != nullptr)
      r = resume;
    itm::ProgressFn fn;
    if (progress != nullptr)
      fn = [&](const itm::LossLogRow& row) {
        return progress(row.iteration, row.lr, row.loss.term1, row.loss.term2, row.loss.total, user) == 0;
      };
    const auto s = itm::run_training(cfg->config, data_dir, out_dir, r, fn);
    if (result != nullptr)
      *result = itm_train_result{s.iterations, s.final_loss.term1, s.final_loss.term2, s.final_loss.total};
  });
}

itm_status itm_infer(const char* checkpoint, const char* ldr_path, const char* out_hdr, const char* mask_png,
                     const char* preview_dir)
{
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(ldr_path, "ldr_path");
    require(out_hdr, "out_hdr");
    itm::InferOutputs extra;
    if (mask_png != nullptr)
      extra.mask_png = mask_png;
    if (preview_dir != nullptr)
      extra.preview_dir = preview_dir;
    itm::run_inference(checkpoint, ldr_path, out_hdr, extra);
  });
}

itm_status itm_score(const itm_image* pred, const itm_image* ref, itm_metrics* out)
{
  return guarded([&] {
    require(pred, "pred");
    require(ref, "ref");
    require(out, "out");
    *out = to_c(itm::score_pair(convert<itm::HdrImage>(pred->image), convert<itm::HdrImage>(ref->image)), 1);
  });
}

itm_status itm_eval(const char* pred_dir, const char* ref_dir, const char* out_csv, itm_metrics* out)
{
  return guarded([&] {
    require(pred_dir, "pred_dir");
    require(ref_dir, "ref_dir");
    require(out_csv, "out_csv");
    const auto report = itm::evaluate(pred_dir, ref_dir, out_csv);
    if (out != nullptr)
      *out = to_c(report.mean, report.rows.size());
  });
}

itm_status itm_ablate(const itm_config* cfg, const char* data_dir, const uint64_t* seeds, size_t n_seeds,
                      const char* out_csv, itm_ablation_fn on_row, void* user)
{
  return guarded([&] {
    require(cfg, "cfg");
    require(seeds, "seeds");
    if (n_seeds == 0)
      throw itm::ConfigError("at least one seed is required");
    cfg->config.validate();
    const auto dataset = data_dir != nullptr
                             ? itm::load_dataset(data_dir)
                             : itm::procedural_dataset(4, cfg->config.network.global_size, cfg->config.pipeline.seed);
    std::function<void(const itm::AblationRow&)> cb;
    if (on_row != nullptr)
      cb = [&](const itm::AblationRow& r) {
        const itm_ablation_row row{r.variant.c_str(), r.seed,           r.iterations, r.final_loss.term1,
                                   r.final_loss.term2, r.final_loss.total, r.pu_psnr_db};
        on_row(&row, user);
      };
    const auto rows = itm::run_ablation(cfg->config, dataset, std::vector<std::uint64_t>(seeds, seeds + n_seeds), cb);
    if (out_csv != nullptr) {
      itm::write_ablation_csv(out_csv, rows);
      std::ofstream sidecar(std::string(out_csv) + ".json");
      sidecar << nlohmann::json{{"config", itm::to_json(cfg->config)},
                                {"seeds", std::vector<std::uint64_t>(seeds, seeds + n_seeds)},
                                {"data", data_dir != nullptr ? nlohmann::json(data_dir) : nlohmann::json("procedural")}}
                     .dump(2)
              << '\n';
    }
  });
}

itm_status itm_gradcheck(uint64_t seed, itm_gradcheck_fn on_row, void* user, int* all_pass)
{
  return guarded([&] {
    std::function<void(const itm::GradcheckRow&)> cb;
    if (on_row != nullptr)
      cb = [&](const itm::GradcheckRow& r) { on_row(r.name.c_str(), r.rel_error, r.coordinates, r.pass, user); };
    const auto rows = itm::run_gradcheck(seed, cb);
    if (all_pass != nullptr)
      *all_pass = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
  });
}

itm_status itm_preview(const char* hdr_path, const char* out_dir, const double* exposures, size_t n_exposures,
                       const char* crf_source)
{
  return guarded([&] {
    require(hdr_path, "hdr_path");
    require(out_dir, "out_dir");
    std::vector<double> t = itm::kPreviewExposures;
    if (exposures != nullptr) {
      if (n_exposures == 0)
        throw itm::ConfigError("exposure list is empty");
      t.assign(exposures, exposures + n_exposures);
    }
    for (double v : t)
      if (!(v > 0.0))
        throw itm::ConfigError("exposures must be positive");
    itm::run_preview(hdr_path, out_dir, t, crf_source != nullptr ? crf_source : "identity");
  });
}

itm_status itm_dump_activations(const char* checkpoint, const itm_config* cfg, const char* ldr_path,
                                const char* out_dir, size_t* files_out)
{
  return guarded([&] {
    require(ldr_path, "ldr_path");
    require(out_dir, "out_dir");
    std::optional<itm::HisnNetwork<float>> net;
    itm::InferenceSettings s;
    if (checkpoint != nullptr) {
      auto loaded = itm::load_checkpoint(checkpoint);
      s = itm::inference_settings(loaded.echo);
      net.emplace(std::move(loaded.state.network));
    } else {
      require(cfg, "cfg (without a checkpoint)");
      cfg->config.network.validate();
      s = {cfg->config.train.tau, cfg->config.train.mask_variant};
      net.emplace(cfg->config.network);
    }
    const auto summary = itm::dump_activations(*net, itm::read_ldr_image(ldr_path), out_dir, s.tau, s.mask_variant);
    if (files_out != nullptr)
      *files_out = summary.grayscale + summary.products;
  });
}

} // extern "C"
