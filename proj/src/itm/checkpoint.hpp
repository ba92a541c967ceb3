// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <json.hpp>

#include "itm/training.hpp"

namespace itm {

/// Container layout:
///   8 bytes   magic "ITMCKPT1"
///   8 bytes   header length, little-endian uint64
///   header    JSON: format, network config, iteration, optimizer
///             hyperparameters, config echo, tensor table
///   payload   little-endian float32 tensors in table order
///
/// Each table entry carries name, role (param | adam_m | adam_v), shape,
/// element offset and count into the payload.
inline constexpr char kCheckpointMagic[8] = {'I', 'T', 'M', 'C', 'K', 'P', 'T', '1'};

void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const nlohmann::json& echo = nlohmann::json::object());

struct LoadedCheckpoint
{
  TrainState state;
  nlohmann::json echo;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

} // namespace itm
