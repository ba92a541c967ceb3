// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "itm/tensor.hpp"

namespace itm {

/// Handle to a value recorded in a Graph.
struct NodeId
{
  std::size_t index = static_cast<std::size_t>(-1);
  friend bool operator==(NodeId, NodeId) = default;
};

struct ConvParams
{
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  int dilation = 1;

  std::string str() const;
};

inline constexpr ConvParams k3s1p1d1{3, 1, 1, 1};
inline constexpr ConvParams k3s1p2d2{3, 1, 2, 2};
inline constexpr ConvParams k3s2p1d1{3, 2, 1, 1};
inline constexpr ConvParams k4s1p0d1{4, 1, 0, 1};

/// Output extent of a convolution along one axis, or 0 if the window does not fit.
std::size_t conv_output_extent(std::size_t in, const ConvParams& p);

enum class LayerKind { Conv, Relu, AvgPool, Concat, Add, Mul, Sigmoid };

struct LayerSpec
{
  LayerKind kind = LayerKind::Relu;
  ConvParams conv{};      // Conv only
  std::size_t in_channels = 0;  // Conv only, 0 means "take from input"
  std::size_t out_channels = 0; // Conv only, 0 means "take from weight"
  int pool = 2;           // AvgPool window and stride

  void validate() const;
};

/// Define-by-run reverse-mode autodiff tape.
///
/// Nodes are appended in construction order and backward() walks them in
/// reverse, so gradient accumulation order is fixed by the forward code.
/// Values that do not depend on any parameter carry no backward closure.
template <typename T>
class Graph
{
public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  NodeId constant(Tensor<T> value);
  NodeId parameter(Tensor<T> value);

  const Tensor<T>& value(NodeId id) const;
  /// Gradient of the last backward() target w.r.t. this node. Zero if the node
  /// is not on a path to the target.
  Tensor<T> grad(NodeId id) const;
  bool requires_grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  void backward(NodeId scalar);

  // Primitives.
  NodeId conv2d(NodeId x, NodeId weight, NodeId bias, const ConvParams& p);
  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId avgpool(NodeId x, int window);
  NodeId concat(std::span<const NodeId> xs);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId apply(const LayerSpec& spec, std::span<const NodeId> inputs);

  // Helpers used by the network and the loss.
  NodeId scale(NodeId x, T s);
  NodeId add_scalar(NodeId x, T s);
  NodeId min_scalar(NodeId x, T ceiling);
  NodeId tile(NodeId x, std::size_t height, std::size_t width);
  NodeId log_map(NodeId x, T mu);
  NodeId square(NodeId x);
  NodeId sqrt(NodeId x);
  NodeId mean(NodeId x);
  NodeId sum(NodeId x);

private:
  using Backward = std::function<void(Graph&, const Tensor<T>& grad_out)>;

  struct Node
  {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward backward;
  };

  NodeId push(Tensor<T> value, bool requires_grad, Backward backward);
  Node& node(NodeId id);
  const Node& node(NodeId id) const;
  Tensor<T>& grad_buffer(NodeId id);
  NodeId broadcast_binary(NodeId a, NodeId b, int op);
  NodeId unary(NodeId x, const std::function<T(T)>& f, const std::function<T(T, T)>& df);

  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

} // namespace itm
