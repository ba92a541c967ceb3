// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

namespace itm {

std::string ConvParams::str() const
{
  return "k" + std::to_string(kernel) + "s" + std::to_string(stride) + "p" + std::to_string(padding) +
         "d" + std::to_string(dilation);
}

std::size_t conv_output_extent(std::size_t in, const ConvParams& p)
{
  const long span = static_cast<long>(p.dilation) * (p.kernel - 1) + 1;
  const long padded = static_cast<long>(in) + 2L * p.padding;
  if (padded < span)
    return 0;
  return static_cast<std::size_t>((padded - span) / p.stride + 1);
}

void LayerSpec::validate() const
{
  if (kind == LayerKind::Conv) {
    if (conv.kernel < 1 || conv.stride < 1 || conv.dilation < 1 || conv.padding < 0)
      throw ConfigError("invalid convolution parameters " + conv.str());
  }
  if (kind == LayerKind::AvgPool && pool < 1)
    throw ConfigError("average pool window must be >= 1");
}

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry
{
  std::size_t batch, in_c, in_h, in_w;
  std::size_t out_c, out_h, out_w;
  ConvParams p;

  std::size_t patch() const { return in_c * p.kernel * p.kernel; }
  std::size_t pixels() const { return out_h * out_w; }
};

// Output columns [lo, hi) whose tap at offset `tap` lands inside [0, extent).
struct ValidRange
{
  std::size_t lo, hi;
};

ValidRange valid_range(std::size_t out, std::size_t extent, int stride, int padding, int tap)
{
  // ix = ox*stride - padding + tap must satisfy 0 <= ix < extent
  const long off = static_cast<long>(tap) - padding;
  long lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  long hi = (static_cast<long>(extent) - off + stride - 1) / stride;
  lo = std::clamp<long>(lo, 0, static_cast<long>(out));
  hi = std::clamp<long>(hi, lo, static_cast<long>(out));
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Unfolds one image of the batch into a (in_c*k*k, out_h*out_w) matrix.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col)
{
  const int k = g.p.kernel;
  const int s = g.p.stride;
  for (std::size_t c = 0; c < g.in_c; ++c) {
    const T* plane = image + c * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      const ValidRange ry = valid_range(g.out_h, g.in_h, s, g.p.padding, ky * g.p.dilation);
      for (int kx = 0; kx < k; ++kx) {
        const ValidRange rx = valid_range(g.out_w, g.in_w, s, g.p.padding, kx * g.p.dilation);
        const long x_off = static_cast<long>(kx) * g.p.dilation - g.p.padding;
        T* row = col + ((c * k + ky) * k + kx) * g.pixels();
        std::fill(row, row + ry.lo * g.out_w, T(0));
        for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
          const long iy = static_cast<long>(oy) * s - g.p.padding + ky * g.p.dilation;
          T* dst = row + oy * g.out_w;
          const T* src = plane + iy * static_cast<long>(g.in_w) + x_off;
          std::fill(dst, dst + rx.lo, T(0));
          if (s == 1) {
            std::copy(src + rx.lo, src + rx.hi, dst + rx.lo);
          } else {
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox)
              dst[ox] = src[static_cast<long>(ox) * s];
          }
          std::fill(dst + rx.hi, dst + g.out_w, T(0));
        }
        std::fill(row + ry.hi * g.out_w, row + g.pixels(), T(0));
      }
    }
  }
}

template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* image)
{
  const int k = g.p.kernel;
  const int s = g.p.stride;
  for (std::size_t c = 0; c < g.in_c; ++c) {
    T* plane = image + c * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      const ValidRange ry = valid_range(g.out_h, g.in_h, s, g.p.padding, ky * g.p.dilation);
      for (int kx = 0; kx < k; ++kx) {
        const ValidRange rx = valid_range(g.out_w, g.in_w, s, g.p.padding, kx * g.p.dilation);
        const long x_off = static_cast<long>(kx) * g.p.dilation - g.p.padding;
        const T* row = col + ((c * k + ky) * k + kx) * g.pixels();
        for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
          const long iy = static_cast<long>(oy) * s - g.p.padding + ky * g.p.dilation;
          T* dst = plane + iy * static_cast<long>(g.in_w) + x_off;
          const T* src = row + oy * g.out_w;
          if (s == 1) {
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox)
              dst[ox] += src[ox];
          } else {
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox)
              dst[static_cast<long>(ox) * s] += src[ox];
          }
        }
      }
    }
  }
}

// Per-thread unfold buffer reused across convolutions.
template <typename T>
T* scratch(std::size_t n)
{
  thread_local AlignedVector<T> buffer;
  if (buffer.size() < n)
    buffer.resize(n);
  return buffer.data();
}

bool channel_broadcastable(const Shape& a, const Shape& b)
{
  if (a == b)
    return true;
  if (a.rank() != 4 || b.rank() != 4)
    return false;
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
    return false;
  return a.c() == 1 || b.c() == 1;
}

} // namespace

template <typename T>
NodeId Graph<T>::push(Tensor<T> value, bool requires_grad, Backward backward)
{
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad)
    n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

template <typename T>
typename Graph<T>::Node& Graph<T>::node(NodeId id)
{
  if (id.index >= nodes_.size())
    throw RuntimeError("invalid graph node handle " + std::to_string(id.index));
  return nodes_[id.index];
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::node(NodeId id) const
{
  if (id.index >= nodes_.size())
    throw RuntimeError("invalid graph node handle " + std::to_string(id.index));
  return nodes_[id.index];
}

template <typename T>
Tensor<T>& Graph<T>::grad_buffer(NodeId id)
{
  Node& n = node(id);
  if (n.grad.empty() && n.value.size() > 0)
    n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
NodeId Graph<T>::constant(Tensor<T> value)
{
  return push(std::move(value), false, nullptr);
}

template <typename T>
NodeId Graph<T>::parameter(Tensor<T> value)
{
  // Leaves have no closure; requires_grad marks them for accumulation.
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Graph<T>::value(NodeId id) const
{
  return node(id).value;
}

template <typename T>
Tensor<T> Graph<T>::grad(NodeId id) const
{
  const Node& n = node(id);
  if (n.grad.empty())
    return Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
bool Graph<T>::requires_grad(NodeId id) const
{
  return node(id).requires_grad;
}

template <typename T>
void Graph<T>::backward(NodeId scalar)
{
  Node& root = node(scalar);
  if (root.value.size() != 1)
    throw RuntimeError("backward requires a scalar output, got shape " + root.value.shape().str());
  for (auto& n : nodes_)
    n.grad = Tensor<T>();
  grad_buffer(scalar)[0] = T(1);
  for (std::size_t i = scalar.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty())
      continue;
    // Closures only accumulate into earlier nodes, so n.grad is stable here.
    n.backward(*this, n.grad);
  }
}

// ---------------------------------------------------------------------------
// Convolution

template <typename T>
NodeId Graph<T>::conv2d(NodeId x, NodeId weight, NodeId bias, const ConvParams& p)
{
  LayerSpec{LayerKind::Conv, p}.validate();
  const Shape& xs = value(x).shape();
  const Shape& ws = value(weight).shape();
  const Shape& bs = value(bias).shape();
  if (xs.rank() != 4)
    throw RuntimeError("conv2d input must be NCHW, got " + xs.str());
  if (ws.rank() != 4 || ws[2] != static_cast<std::size_t>(p.kernel) || ws[3] != static_cast<std::size_t>(p.kernel))
    throw RuntimeError("conv2d weight must be (Cout,Cin," + std::to_string(p.kernel) + "," +
                       std::to_string(p.kernel) + "), got " + ws.str());
  if (ws[1] != xs.c())
    throw RuntimeError("conv2d channel mismatch: input C=" + std::to_string(xs.c()) + " but weight Cin=" +
                       std::to_string(ws[1]));
  if (bs.numel() != ws[0])
    throw RuntimeError("conv2d bias length " + std::to_string(bs.numel()) + " does not match Cout=" +
                       std::to_string(ws[0]));

  ConvGeometry g{xs.n(), xs.c(), xs.h(), xs.w(), ws[0], conv_output_extent(xs.h(), p),
                 conv_output_extent(xs.w(), p), p};
  if (g.out_h == 0)
    throw RuntimeError("conv2d " + p.str() + " does not fit input height H=" + std::to_string(xs.h()));
  if (g.out_w == 0)
    throw RuntimeError("conv2d " + p.str() + " does not fit input width W=" + std::to_string(xs.w()));

  Tensor<T> out(Shape{g.batch, g.out_c, g.out_h, g.out_w});
  T* col = scratch<T>(g.patch() * g.pixels());
  const T* in = value(x).data().data();
  ConstMatrixMap<T> w(value(weight).data().data(), g.out_c, g.patch());
  const T* b = value(bias).data().data();
  for (std::size_t n = 0; n < g.batch; ++n) {
    im2col(in + n * g.in_c * g.in_h * g.in_w, g, col);
    ConstMatrixMap<T> cm(col, g.patch(), g.pixels());
    MatrixMap<T> om(out.data().data() + n * g.out_c * g.pixels(), g.out_c, g.pixels());
    om.noalias() = w * cm;
    for (std::size_t c = 0; c < g.out_c; ++c)
      om.row(c).array() += b[c];
  }

  const bool rg = requires_grad(x) || requires_grad(weight) || requires_grad(bias);
  return push(std::move(out), rg, [x, weight, bias, g](Graph& graph, const Tensor<T>& go) {
    const bool need_x = graph.requires_grad(x);
    const bool need_w = graph.requires_grad(weight);
    const bool need_b = graph.requires_grad(bias);
    T* col = scratch<T>(g.patch() * g.pixels());
    const T* in = graph.value(x).data().data();
    ConstMatrixMap<T> w(graph.value(weight).data().data(), g.out_c, g.patch());
    T* gx = need_x ? graph.grad_buffer(x).data().data() : nullptr;
    T* gw = need_w ? graph.grad_buffer(weight).data().data() : nullptr;
    T* gb = need_b ? graph.grad_buffer(bias).data().data() : nullptr;
    for (std::size_t n = 0; n < g.batch; ++n) {
      ConstMatrixMap<T> gom(go.data().data() + n * g.out_c * g.pixels(), g.out_c, g.pixels());
      if (need_b) {
        for (std::size_t c = 0; c < g.out_c; ++c)
          gb[c] += gom.row(c).sum();
      }
      if (need_w) {
        im2col(in + n * g.in_c * g.in_h * g.in_w, g, col);
        ConstMatrixMap<T> cm(col, g.patch(), g.pixels());
        MatrixMap<T> gwm(gw, g.out_c, g.patch());
        gwm.noalias() += gom * cm.transpose();
      }
      if (need_x) {
        MatrixMap<T> cm(col, g.patch(), g.pixels());
        cm.noalias() = w.transpose() * gom;
        col2im(col, g, gx + n * g.in_c * g.in_h * g.in_w);
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
NodeId Graph<T>::relu(NodeId x)
{
  const Tensor<T>& in = value(x);
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = in[i] > T(0) ? in[i] : T(0);
  return push(std::move(out), requires_grad(x), [x](Graph& graph, const Tensor<T>& go) {
    const Tensor<T>& in = graph.value(x);
    Tensor<T>& gx = graph.grad_buffer(x);
    for (std::size_t i = 0; i < in.size(); ++i)
      if (in[i] > T(0))
        gx[i] += go[i];
  });
}

template <typename T>
NodeId Graph<T>::sigmoid(NodeId x)
{
  const Tensor<T>& in = value(x);
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = T(1) / (T(1) + std::exp(-in[i]));
  const std::size_t self = nodes_.size();
  return push(std::move(out), requires_grad(x), [x, self](Graph& graph, const Tensor<T>& go) {
    const Tensor<T>& y = graph.nodes_[self].value;
    Tensor<T>& gx = graph.grad_buffer(x);
    for (std::size_t i = 0; i < y.size(); ++i)
      gx[i] += go[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
NodeId Graph<T>::unary(NodeId x, const std::function<T(T)>& f, const std::function<T(T, T)>& df)
{
  const Tensor<T>& in = value(x);
  Tensor<T> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = f(in[i]);
  const std::size_t self = nodes_.size();
  // df(input, output) -> local derivative
  return push(std::move(out), requires_grad(x), [x, self, df](Graph& graph, const Tensor<T>& go) {
    const Tensor<T>& in = graph.value(x);
    const Tensor<T>& y = graph.nodes_[self].value;
    Tensor<T>& gx = graph.grad_buffer(x);
    for (std::size_t i = 0; i < in.size(); ++i)
      gx[i] += go[i] * df(in[i], y[i]);
  });
}

template <typename T>
NodeId Graph<T>::scale(NodeId x, T s)
{
  return unary(x, [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <typename T>
NodeId Graph<T>::add_scalar(NodeId x, T s)
{
  return unary(x, [s](T v) { return v + s; }, [](T, T) { return T(1); });
}

template <typename T>
NodeId Graph<T>::min_scalar(NodeId x, T ceiling)
{
  return unary(
      x, [ceiling](T v) { return v < ceiling ? v : ceiling; },
      [ceiling](T v, T) { return v < ceiling ? T(1) : T(0); });
}

template <typename T>
NodeId Graph<T>::log_map(NodeId x, T mu)
{
  if (!(mu > T(0)))
    throw ConfigError("log map parameter mu must be positive");
  const Tensor<T>& in = value(x);
  for (std::size_t i = 0; i < in.size(); ++i)
    if (in[i] < T(0))
      throw InputError("log map input must be nonnegative, found " + std::to_string(double(in[i])) +
                       " at index " + std::to_string(i));
  const T denom = std::log1p(mu);
  return unary(
      x, [mu, denom](T v) { return std::log1p(mu * v) / denom; },
      [mu, denom](T v, T) { return mu / ((T(1) + mu * v) * denom); });
}

template <typename T>
NodeId Graph<T>::square(NodeId x)
{
  return unary(x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
NodeId Graph<T>::sqrt(NodeId x)
{
  // The derivative at 0 is taken as 0 so a perfect fit yields finite gradients.
  return unary(
      x, [](T v) { return std::sqrt(v); }, [](T, T y) { return y > T(0) ? T(0.5) / y : T(0); });
}

template <typename T>
NodeId Graph<T>::mean(NodeId x)
{
  const Tensor<T>& in = value(x);
  if (in.size() == 0)
    throw RuntimeError("mean of an empty tensor");
  T acc = 0;
  for (std::size_t i = 0; i < in.size(); ++i)
    acc += in[i];
  const T count = static_cast<T>(in.size());
  return push(Tensor<T>(Shape{1}, {acc / count}), requires_grad(x), [x, count](Graph& graph, const Tensor<T>& go) {
    Tensor<T>& gx = graph.grad_buffer(x);
    const T g = go[0] / count;
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx[i] += g;
  });
}

template <typename T>
NodeId Graph<T>::sum(NodeId x)
{
  const Tensor<T>& in = value(x);
  T acc = 0;
  for (std::size_t i = 0; i < in.size(); ++i)
    acc += in[i];
  return push(Tensor<T>(Shape{1}, {acc}), requires_grad(x), [x](Graph& graph, const Tensor<T>& go) {
    Tensor<T>& gx = graph.grad_buffer(x);
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx[i] += go[0];
  });
}

// op: 0 add, 1 sub, 2 mul
template <typename T>
NodeId Graph<T>::broadcast_binary(NodeId a, NodeId b, int op)
{
  const Shape& as = value(a).shape();
  const Shape& bs = value(b).shape();
  if (!channel_broadcastable(as, bs))
    throw RuntimeError("elementwise operands " + as.str() + " and " + bs.str() +
                       " differ outside the channel axis");
  const Shape out_shape = (as.numel() >= bs.numel()) ? as : bs;
  const bool same = as == bs;
  const std::size_t batch = same ? 1 : out_shape.n();
  const std::size_t channels = same ? 1 : out_shape.c();
  const std::size_t inner = same ? out_shape.numel() : out_shape.h() * out_shape.w();
  const bool a_bc = !same && as.c() == 1 && channels > 1;
  const bool b_bc = !same && bs.c() == 1 && channels > 1;

  auto index = [=](bool bc, std::size_t n, std::size_t c, std::size_t p) {
    return bc ? n * inner + p : (n * channels + c) * inner + p;
  };

  const Tensor<T>& av = value(a);
  const Tensor<T>& bv = value(b);
  Tensor<T> out(out_shape);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t p = 0; p < inner; ++p) {
        const T x = av[index(a_bc, n, c, p)];
        const T y = bv[index(b_bc, n, c, p)];
        out[(n * channels + c) * inner + p] = op == 0 ? x + y : op == 1 ? x - y : x * y;
      }

  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [=](Graph& graph, const Tensor<T>& go) {
    const bool need_a = graph.requires_grad(a);
    const bool need_b = graph.requires_grad(b);
    const Tensor<T>& av = graph.value(a);
    const Tensor<T>& bv = graph.value(b);
    T* ga = need_a ? graph.grad_buffer(a).data().data() : nullptr;
    T* gb = need_b ? graph.grad_buffer(b).data().data() : nullptr;
    for (std::size_t n = 0; n < batch; ++n)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t p = 0; p < inner; ++p) {
          const T g = go[(n * channels + c) * inner + p];
          const std::size_t ia = index(a_bc, n, c, p);
          const std::size_t ib = index(b_bc, n, c, p);
          if (need_a)
            ga[ia] += op == 2 ? g * bv[ib] : g;
          if (need_b)
            gb[ib] += op == 2 ? g * av[ia] : (op == 1 ? -g : g);
        }
  });
}

template <typename T>
NodeId Graph<T>::add(NodeId a, NodeId b)
{
  return broadcast_binary(a, b, 0);
}

template <typename T>
NodeId Graph<T>::sub(NodeId a, NodeId b)
{
  return broadcast_binary(a, b, 1);
}

template <typename T>
NodeId Graph<T>::mul(NodeId a, NodeId b)
{
  return broadcast_binary(a, b, 2);
}

// ---------------------------------------------------------------------------
// Spatial and structural

template <typename T>
NodeId Graph<T>::avgpool(NodeId x, int window)
{
  LayerSpec spec{LayerKind::AvgPool};
  spec.pool = window;
  spec.validate();
  const Shape& s = value(x).shape();
  if (s.rank() != 4)
    throw RuntimeError("avgpool input must be NCHW, got " + s.str());
  const std::size_t k = static_cast<std::size_t>(window);
  if (s.h() < k || s.w() < k)
    throw RuntimeError("avgpool window " + std::to_string(k) + " larger than input " + s.str());
  const std::size_t oh = s.h() / k, ow = s.w() / k;
  const std::size_t planes = s.n() * s.c();
  const Tensor<T>& in = value(x);
  Tensor<T> out(Shape{s.n(), s.c(), oh, ow});
  const T inv = T(1) / static_cast<T>(k * k);
  for (std::size_t pl = 0; pl < planes; ++pl)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T acc = 0;
        for (std::size_t dy = 0; dy < k; ++dy)
          for (std::size_t dx = 0; dx < k; ++dx)
            acc += in[(pl * s.h() + oy * k + dy) * s.w() + ox * k + dx];
        out[(pl * oh + oy) * ow + ox] = acc * inv;
      }
  return push(std::move(out), requires_grad(x), [x, s, k, oh, ow, planes, inv](Graph& graph, const Tensor<T>& go) {
    Tensor<T>& gx = graph.grad_buffer(x);
    for (std::size_t pl = 0; pl < planes; ++pl)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T g = go[(pl * oh + oy) * ow + ox] * inv;
          for (std::size_t dy = 0; dy < k; ++dy)
            for (std::size_t dx = 0; dx < k; ++dx)
              gx[(pl * s.h() + oy * k + dy) * s.w() + ox * k + dx] += g;
        }
  });
}

template <typename T>
NodeId Graph<T>::concat(std::span<const NodeId> xs)
{
  if (xs.empty())
    throw RuntimeError("concat of zero tensors");
  const Shape& first = value(xs[0]).shape();
  if (first.rank() != 4)
    throw RuntimeError("concat inputs must be NCHW, got " + first.str());
  std::size_t channels = 0;
  bool rg = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Shape& s = value(xs[i]).shape();
    if (s.rank() != 4 || s.n() != first.n() || s.h() != first.h() || s.w() != first.w())
      throw RuntimeError("concat input " + std::to_string(i) + " has shape " + s.str() +
                         ", non-channel extents must match " + first.str());
    channels += s.c();
    rg = rg || requires_grad(xs[i]);
  }
  const std::size_t hw = first.h() * first.w();
  Tensor<T> out(Shape{first.n(), channels, first.h(), first.w()});
  std::vector<NodeId> inputs(xs.begin(), xs.end());
  for (std::size_t n = 0; n < first.n(); ++n) {
    std::size_t offset = 0;
    for (NodeId id : inputs) {
      const Tensor<T>& v = value(id);
      const std::size_t block = v.shape().c() * hw;
      std::copy_n(v.data().data() + n * block, block, out.data().data() + (n * channels * hw) + offset);
      offset += block;
    }
  }
  return push(std::move(out), rg, [inputs, channels, hw, batch = first.n()](Graph& graph, const Tensor<T>& go) {
    for (std::size_t n = 0; n < batch; ++n) {
      std::size_t offset = 0;
      for (NodeId id : inputs) {
        const std::size_t block = graph.value(id).shape().c() * hw;
        if (graph.requires_grad(id)) {
          T* g = graph.grad_buffer(id).data().data() + n * block;
          const T* src = go.data().data() + n * channels * hw + offset;
          for (std::size_t i = 0; i < block; ++i)
            g[i] += src[i];
        }
        offset += block;
      }
    }
  });
}

template <typename T>
NodeId Graph<T>::tile(NodeId x, std::size_t height, std::size_t width)
{
  const Shape& s = value(x).shape();
  if (s.rank() != 4 || s.h() != 1 || s.w() != 1)
    throw RuntimeError("tile expects a (N,C,1,1) descriptor, got " + s.str());
  const std::size_t planes = s.n() * s.c();
  const std::size_t hw = height * width;
  const Tensor<T>& in = value(x);
  Tensor<T> out(Shape{s.n(), s.c(), height, width});
  for (std::size_t pl = 0; pl < planes; ++pl)
    std::fill_n(out.data().data() + pl * hw, hw, in[pl]);
  return push(std::move(out), requires_grad(x), [x, planes, hw](Graph& graph, const Tensor<T>& go) {
    Tensor<T>& gx = graph.grad_buffer(x);
    for (std::size_t pl = 0; pl < planes; ++pl) {
      T acc = 0;
      for (std::size_t i = 0; i < hw; ++i)
        acc += go[pl * hw + i];
      gx[pl] += acc;
    }
  });
}

template <typename T>
NodeId Graph<T>::apply(const LayerSpec& spec, std::span<const NodeId> inputs)
{
  spec.validate();
  auto expect = [&](std::size_t count, const char* name) {
    if (inputs.size() != count)
      throw RuntimeError(std::string(name) + " expects " + std::to_string(count) + " inputs, got " +
                         std::to_string(inputs.size()));
  };
  switch (spec.kind) {
  case LayerKind::Conv: {
    expect(3, "conv");
    const Shape& ws = value(inputs[1]).shape();
    if (spec.in_channels && ws.rank() == 4 && ws[1] != spec.in_channels)
      throw RuntimeError("conv weight Cin=" + std::to_string(ws[1]) + " but layer declares " +
                         std::to_string(spec.in_channels));
    if (spec.out_channels && ws.rank() == 4 && ws[0] != spec.out_channels)
      throw RuntimeError("conv weight Cout=" + std::to_string(ws[0]) + " but layer declares " +
                         std::to_string(spec.out_channels));
    return conv2d(inputs[0], inputs[1], inputs[2], spec.conv);
  }
  case LayerKind::Relu:
    expect(1, "relu");
    return relu(inputs[0]);
  case LayerKind::Sigmoid:
    expect(1, "sigmoid");
    return sigmoid(inputs[0]);
  case LayerKind::AvgPool:
    expect(1, "avgpool");
    return avgpool(inputs[0], spec.pool);
  case LayerKind::Concat:
    return concat(inputs);
  case LayerKind::Add:
    expect(2, "add");
    return add(inputs[0], inputs[1]);
  case LayerKind::Mul:
    expect(2, "mul");
    return mul(inputs[0], inputs[1]);
  }
  throw RuntimeError("unknown layer kind");
}

template class Graph<float>;
template class Graph<double>;

} // namespace itm
