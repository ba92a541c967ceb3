// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace itm {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object and complains about anything left over.
class ObjectReader
{
public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object())
      throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out)
  {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end())
      return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean())
          throw ConfigError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number())
          throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_float() || (it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0))
            throw ConfigError("");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string())
          throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(path_ + "." + key + ": unexpected value " + it->dump());
    }
  }

  template <typename Enum, typename Parse>
  void get_enum(const char* key, Enum& out, Parse parse)
  {
    std::string s;
    bool present = j_.contains(key);
    get(key, s);
    if (present)
      out = parse(s);
  }

  void finish() const
  {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k))
        throw ConfigError(path_ + ": unknown key '" + k + "'");
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

} // namespace

RunConfig RunConfig::toy()
{
  RunConfig c;
  c.network = HisnConfig::toy();
  c.train = TrainConfig::toy();
  return c;
}

void RunConfig::validate() const
{
  if (schema_version != kSchemaVersion)
    throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  pipeline.validate();
  network.validate();
  train.validate();
  if (train.crop_size != network.global_size)
    throw ConfigError("train.crop_size must equal network.global_size");
}

json to_json(const PipelineConfig& c)
{
  return json{{"exposures", c.exposures},
              {"exposure_count", c.exposure_count},
              {"exposure_lo_log2", c.exposure_lo_log2},
              {"exposure_hi_log2", c.exposure_hi_log2},
              {"crf_source", c.crf_source},
              {"crf_split", c.crf_split},
              {"sigma_s_max", c.sigma_s_max},
              {"sigma_c_max", c.sigma_c_max},
              {"noise", c.noise},
              {"jpeg", c.jpeg},
              {"jpeg_quality_min", c.jpeg_quality_min},
              {"jpeg_quality_max", c.jpeg_quality_max},
              {"seed", c.seed}};
}

json to_json(const HisnConfig& c)
{
  return json{{"width", c.width},
              {"fusion_blocks", c.fusion_blocks},
              {"modulated_blocks", c.modulated_blocks},
              {"local_layers", c.local_layers},
              {"dilation_layers", c.dilation_layers},
              {"global_size", c.global_size},
              {"variant", to_string(c.variant)},
              {"seed", c.seed}};
}

json to_json(const TrainConfig& c)
{
  return json{{"lambda", c.lambda},
              {"mu", c.mu},
              {"batch_size", c.batch_size},
              {"iterations", c.iterations},
              {"learning_rate", c.learning_rate},
              {"decay", c.decay},
              {"decay_interval", c.decay_interval},
              {"crop_size", c.crop_size},
              {"tau", c.tau},
              {"mask_variant", to_string(c.mask_variant)},
              {"seed", c.seed}};
}

json to_json(const RunConfig& c)
{
  return json{{"schema_version", c.schema_version},
              {"pipeline", to_json(c.pipeline)},
              {"network", to_json(c.network)},
              {"train", to_json(c.train)}};
}

PipelineConfig pipeline_from_json(const json& j, PipelineConfig c)
{
  ObjectReader r(j, "pipeline");
  r.get("exposures", c.exposures);
  r.get("exposure_count", c.exposure_count);
  r.get("exposure_lo_log2", c.exposure_lo_log2);
  r.get("exposure_hi_log2", c.exposure_hi_log2);
  r.get("crf_source", c.crf_source);
  r.get("crf_split", c.crf_split);
  r.get("sigma_s_max", c.sigma_s_max);
  r.get("sigma_c_max", c.sigma_c_max);
  r.get("noise", c.noise);
  r.get("jpeg", c.jpeg);
  r.get("jpeg_quality_min", c.jpeg_quality_min);
  r.get("jpeg_quality_max", c.jpeg_quality_max);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

HisnConfig network_from_json(const json& j, HisnConfig c)
{
  ObjectReader r(j, "network");
  r.get("width", c.width);
  r.get("fusion_blocks", c.fusion_blocks);
  r.get("modulated_blocks", c.modulated_blocks);
  r.get("local_layers", c.local_layers);
  r.get("dilation_layers", c.dilation_layers);
  r.get("global_size", c.global_size);
  r.get_enum("variant", c.variant, parse_variant);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

TrainConfig train_from_json(const json& j, TrainConfig c)
{
  ObjectReader r(j, "train");
  r.get("lambda", c.lambda);
  r.get("mu", c.mu);
  r.get("batch_size", c.batch_size);
  r.get("iterations", c.iterations);
  r.get("learning_rate", c.learning_rate);
  r.get("decay", c.decay);
  r.get("decay_interval", c.decay_interval);
  r.get("crop_size", c.crop_size);
  r.get("tau", c.tau);
  r.get_enum("mask_variant", c.mask_variant, parse_mask_variant);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

RunConfig run_config_from_json(const json& j, RunConfig c)
{
  ObjectReader r(j, "config");
  r.get("schema_version", c.schema_version);
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("schema_version " + std::to_string(c.schema_version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  if (j.contains("pipeline"))
    c.pipeline = pipeline_from_json(j["pipeline"], c.pipeline);
  if (j.contains("network"))
    c.network = network_from_json(j["network"], c.network);
  if (j.contains("train"))
    c.train = train_from_json(j["train"], c.train);
  json unused;
  r.get("pipeline", unused);
  r.get("network", unused);
  r.get("train", unused);
  r.finish();
  if (!j.contains("schema_version"))
    throw ConfigError("config: missing schema_version");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig c = run_config_from_json(j, std::move(base));
  c.validate();
  return c;
}

RunConfig resolve_run_config(const std::optional<std::filesystem::path>& path, RunConfig fallback)
{
  if (path)
    return load_run_config(*path, std::move(fallback));
  if (const char* env = std::getenv(kConfigEnvVar); env && *env)
    return load_run_config(env, std::move(fallback));
  return fallback;
}

} // namespace itm
