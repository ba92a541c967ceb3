// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iostream>
#include <string_view>

namespace itm::log {

inline void warn(std::string_view msg)
{
  std::cerr << "[itm] warning: " << msg << '\n';
}

inline void info(std::string_view msg)
{
  std::cerr << "[itm] " << msg << '\n';
}

} // namespace itm::log
