// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "itm/graph.hpp"

namespace itm {

template <typename T>
struct Parameter
{
  std::string name;
  Tensor<T> value;
};

/// Ordered, named collection of learnable tensors.
template <typename T>
class ParameterSet
{
public:
  std::size_t add(std::string name, Tensor<T> value)
  {
    params_.push_back({std::move(name), std::move(value)});
    return params_.size() - 1;
  }

  std::size_t size() const { return params_.size(); }
  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t find(const std::string& name) const
  {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name)
        return i;
    throw RuntimeError("unknown parameter '" + name + "'");
  }

  std::size_t scalar_count() const
  {
    std::size_t n = 0;
    for (const auto& p : params_)
      n += p.value.size();
    return n;
  }

  /// Registers every parameter as a graph leaf; the result is indexed like this set.
  std::vector<NodeId> bind(Graph<T>& graph) const
  {
    std::vector<NodeId> ids;
    ids.reserve(params_.size());
    for (const auto& p : params_)
      ids.push_back(graph.parameter(p.value));
    return ids;
  }

  template <typename U>
  ParameterSet<U> cast() const
  {
    ParameterSet<U> out;
    for (const auto& p : params_)
      out.add(p.name, p.value.template cast<U>());
    return out;
  }

private:
  std::vector<Parameter<T>> params_;
};

} // namespace itm
