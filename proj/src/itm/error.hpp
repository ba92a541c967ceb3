// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace itm {

// Error categories double as CLI exit codes and C API status values.
enum class ErrorKind : int {
  Runtime = 1,
  Input = 2,
  Config = 3,
};

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class RuntimeError : public Error
{
public:
  explicit RuntimeError(const std::string& message) : Error(ErrorKind::Runtime, message) {}
};

class InputError : public Error
{
public:
  explicit InputError(const std::string& message) : Error(ErrorKind::Input, message) {}
};

class ConfigError : public Error
{
public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::Config, message) {}
};

} // namespace itm
