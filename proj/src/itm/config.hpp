// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "itm/hisn.hpp"
#include "itm/pipeline.hpp"
#include "itm/training.hpp"

namespace itm {

inline constexpr int kSchemaVersion = 1;

/// Environment variable naming the config file used when none is given.
inline constexpr const char* kConfigEnvVar = "ITM_CONFIG";

struct RunConfig
{
  int schema_version = kSchemaVersion;
  PipelineConfig pipeline;
  HisnConfig network;
  TrainConfig train;

  /// Toy network and training presets.
  static RunConfig toy();

  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& c);
nlohmann::json to_json(const HisnConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const RunConfig& c);

/// Each parser starts from `base` and overrides the keys present. Unknown keys
/// and wrongly typed values raise ConfigError with the JSON path.
PipelineConfig pipeline_from_json(const nlohmann::json& j, PipelineConfig base = {});
HisnConfig network_from_json(const nlohmann::json& j, HisnConfig base = {});
TrainConfig train_from_json(const nlohmann::json& j, TrainConfig base = {});
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Explicit path if given, else $ITM_CONFIG if set, else `fallback`.
RunConfig resolve_run_config(const std::optional<std::filesystem::path>& path, RunConfig fallback);

} // namespace itm
