// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "confield/encoding.hpp"
#include "confield/errors.hpp"
#include "confield/rng.hpp"

namespace confield {

namespace streams {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t render = 2;
inline constexpr std::uint64_t batch = 3;
inline constexpr std::uint64_t dataset = 4;
}  // namespace streams

enum class Activation { relu };
enum class DensityActivation { relu, softplus };
enum class ColorActivation { sigmoid };

/// Fixed radiance-field MLP family: a trunk of `hidden_layers` equal-width
/// layers over the encoded position, with the encoded position re-concatenated
/// after hidden layer `skip_after_layer` (1-based); a one-unit density head off
/// the trunk; and a color branch that mixes the trunk feature with the encoded
/// direction through one hidden layer.
struct MlpArchitecture {
  int hidden_layers = 8;
  int width = 64;
  int skip_after_layer = 5;  // encoded position re-enters after this hidden layer
  int pos_enc_dim = encoded_dim(6, true);   // 39
  int dir_enc_dim = encoded_dim(4, true);   // 27
  Activation activation = Activation::relu;
  DensityActivation density_activation = DensityActivation::relu;
  ColorActivation color_activation = ColorActivation::sigmoid;

  void validate() const {
    if (hidden_layers < 1) throw ContractError("hidden_layers must be >= 1");
    if (width < 1) throw ContractError("width must be >= 1");
    if (pos_enc_dim < 1) throw ContractError("pos_enc_dim must be >= 1");
    if (dir_enc_dim < 1) throw ContractError("dir_enc_dim must be >= 1");
    if (skip_after_layer < 1 || skip_after_layer >= hidden_layers)
      throw ContractError("skip_after_layer must satisfy 1 <= skip_after_layer < hidden_layers");
  }

  bool operator==(const MlpArchitecture&) const = default;
};

/// Returns an architecture whose input dims match an encoding configuration.
inline MlpArchitecture make_arch(const EncodingConfig& enc, int width = 64,
                                 int hidden_layers = 8, int skip_after_layer = 5) {
  MlpArchitecture a;
  a.hidden_layers = hidden_layers;
  a.width = width;
  a.skip_after_layer = skip_after_layer;
  a.pos_enc_dim = encoded_dim(enc.pos_frequencies, enc.include_identity);
  a.dir_enc_dim = encoded_dim(enc.dir_frequencies, enc.include_identity);
  a.validate();
  return a;
}

/// One linear layer's shape and its position in the flat parameter vector.
/// Layout is layer-major: weights row-major (out x in), then biases.
struct LayerShape {
  int in = 0;
  int out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(in) * out + static_cast<std::size_t>(out);
  }
};

/// Layer order: trunk [0, hidden_layers), then density head, color hidden,
/// color output.
inline std::vector<LayerShape> layer_table(const MlpArchitecture& a) {
  a.validate();
  std::vector<LayerShape> shapes;
  shapes.reserve(static_cast<std::size_t>(a.hidden_layers) + 3);
  std::size_t offset = 0;
  auto push = [&](int in, int out) {
    LayerShape s;
    s.in = in;
    s.out = out;
    s.weight_offset = offset;
    s.bias_offset = offset + static_cast<std::size_t>(in) * out;
    offset = s.bias_offset + static_cast<std::size_t>(out);
    shapes.push_back(s);
  };
  for (int l = 0; l < a.hidden_layers; ++l) {
    int in = a.width;
    if (l == 0)
      in = a.pos_enc_dim;
    else if (l == a.skip_after_layer)
      in = a.width + a.pos_enc_dim;
    push(in, a.width);
  }
  push(a.width, 1);                      // density head
  push(a.width + a.dir_enc_dim, a.width);  // color hidden
  push(a.width, 3);                      // color output
  return shapes;
}

inline std::size_t param_count(const MlpArchitecture& a) {
  const auto shapes = layer_table(a);
  const auto& last = shapes.back();
  return last.bias_offset + static_cast<std::size_t>(last.out);
}

namespace detail {

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
Eigen::Map<const RowMat<Real>> weight_view(std::span<const Real> params, const LayerShape& s) {
  return {params.data() + s.weight_offset, s.out, s.in};
}

template <typename Real>
Eigen::Map<RowMat<Real>> weight_view_mut(std::span<Real> params, const LayerShape& s) {
  return {params.data() + s.weight_offset, s.out, s.in};
}

template <typename Real>
Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> bias_view(std::span<const Real> params,
                                                                   const LayerShape& s) {
  return {params.data() + s.bias_offset, 1, s.out};
}

template <typename Real>
Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>> bias_view_mut(std::span<Real> params,
                                                                 const LayerShape& s) {
  return {params.data() + s.bias_offset, 1, s.out};
}

}  // namespace detail

/// Draws weights with uniform fan-in scaling (bound 1/sqrt(fan_in)) from a
/// seeded stream; biases are zero. Identical (arch, seed) gives bit-identical
/// vectors.
template <typename Real = float>
std::vector<Real> mlp_init(const MlpArchitecture& a, std::uint64_t seed) {
  const auto shapes = layer_table(a);
  std::vector<Real> params(param_count(a), Real(0));
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const LayerShape& s = shapes[l];
    Rng rng = Rng::keyed(seed, {streams::init, l});
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    const std::size_t n = static_cast<std::size_t>(s.in) * s.out;
    for (std::size_t i = 0; i < n; ++i)
      params[s.weight_offset + i] = static_cast<Real>(rng.uniform(-bound, bound));
  }
  return params;
}

/// Forward-pass cache. `raw` holds the pre-activation heads per input row:
/// column 0 is the density head, columns 1..3 the color head.
template <typename Real>
struct MlpForward {
  MatX<Real> input;                // n x (pos_enc_dim + dir_enc_dim)
  std::vector<MatX<Real>> trunk;   // post-relu activations, n x width each
  MatX<Real> color_hidden;         // post-relu, n x width
  MatX<Real> raw;                  // n x 4
};

template <typename Real>
MlpForward<Real> mlp_forward(std::span<const Real> params, const MlpArchitecture& a,
                             MatX<Real> inputs) {
  const auto shapes = layer_table(a);
  if (params.size() != param_count(a))
    throw ContractError("mlp_forward: weight vector length does not match architecture");
  if (inputs.cols() != a.pos_enc_dim + a.dir_enc_dim)
    throw ContractError("mlp_forward: input width " + std::to_string(inputs.cols()) +
                        " does not match pos_enc_dim + dir_enc_dim = " +
                        std::to_string(a.pos_enc_dim + a.dir_enc_dim));
  using detail::bias_view;
  using detail::weight_view;

  MlpForward<Real> f;
  f.input = std::move(inputs);
  const Eigen::Index n = f.input.rows();
  const auto pos = f.input.leftCols(a.pos_enc_dim);
  const auto dir = f.input.rightCols(a.dir_enc_dim);

  f.trunk.reserve(static_cast<std::size_t>(a.hidden_layers));
  MatX<Real> pre;
  for (int l = 0; l < a.hidden_layers; ++l) {
    const LayerShape& s = shapes[static_cast<std::size_t>(l)];
    const auto w = weight_view(params, s);
    if (l == 0) {
      pre.noalias() = pos * w.transpose();
    } else if (l == a.skip_after_layer) {
      // Input here is [trunk activation | encoded position].
      pre.noalias() = f.trunk.back() * w.leftCols(a.width).transpose();
      pre.noalias() += pos * w.rightCols(a.pos_enc_dim).transpose();
    } else {
      pre.noalias() = f.trunk.back() * w.transpose();
    }
    pre.rowwise() += bias_view(params, s);
    f.trunk.push_back(pre.cwiseMax(Real(0)));
  }

  f.raw.resize(n, 4);
  const LayerShape& sd = shapes[static_cast<std::size_t>(a.hidden_layers)];
  f.raw.col(0).noalias() = f.trunk.back() * weight_view(params, sd).transpose();
  f.raw.col(0).array() += params[sd.bias_offset];

  const LayerShape& sc = shapes[static_cast<std::size_t>(a.hidden_layers) + 1];
  {
    const auto w = weight_view(params, sc);
    pre.noalias() = f.trunk.back() * w.leftCols(a.width).transpose();
    pre.noalias() += dir * w.rightCols(a.dir_enc_dim).transpose();
    pre.rowwise() += bias_view(params, sc);
    f.color_hidden = pre.cwiseMax(Real(0));
  }

  const LayerShape& so = shapes[static_cast<std::size_t>(a.hidden_layers) + 2];
  f.raw.rightCols(3).noalias() = f.color_hidden * weight_view(params, so).transpose();
  f.raw.rightCols(3).rowwise() += bias_view(params, so);
  return f;
}

/// Reverse-mode gradient of <raw outputs, upstream> with respect to the
/// weights; optionally also with respect to the inputs. `grad_out` is
/// overwritten.
template <typename Real>
void mlp_backward(std::span<const Real> params, const MlpArchitecture& a,
                  const MlpForward<Real>& f, const MatX<Real>& upstream,
                  std::span<Real> grad_out, MatX<Real>* input_grad = nullptr) {
  const auto shapes = layer_table(a);
  if (grad_out.size() != param_count(a))
    throw ContractError("mlp_backward: gradient buffer length mismatch");
  if (upstream.rows() != f.raw.rows() || upstream.cols() != 4)
    throw ContractError("mlp_backward: upstream gradient must be n x 4");
  using detail::bias_view_mut;
  using detail::weight_view;
  using detail::weight_view_mut;

  std::fill(grad_out.begin(), grad_out.end(), Real(0));
  const auto pos = f.input.leftCols(a.pos_enc_dim);
  const auto dir = f.input.rightCols(a.dir_enc_dim);
  if (input_grad) input_grad->setZero(f.input.rows(), f.input.cols());

  // Color output layer.
  const LayerShape& so = shapes[static_cast<std::size_t>(a.hidden_layers) + 2];
  const auto dcolor = upstream.rightCols(3);
  weight_view_mut(grad_out, so).noalias() = dcolor.transpose() * f.color_hidden;
  bias_view_mut(grad_out, so) = dcolor.colwise().sum();
  MatX<Real> dch = dcolor * weight_view(params, so);
  dch.array() *= (f.color_hidden.array() > Real(0)).template cast<Real>();

  // Color hidden layer, input [trunk | encoded direction].
  const LayerShape& sc = shapes[static_cast<std::size_t>(a.hidden_layers) + 1];
  {
    auto wg = weight_view_mut(grad_out, sc);
    wg.leftCols(a.width).noalias() = dch.transpose() * f.trunk.back();
    wg.rightCols(a.dir_enc_dim).noalias() = dch.transpose() * dir;
    bias_view_mut(grad_out, sc) = dch.colwise().sum();
  }
  MatX<Real> dlast = dch * weight_view(params, sc).leftCols(a.width);
  if (input_grad)
    input_grad->rightCols(a.dir_enc_dim).noalias() =
        dch * weight_view(params, sc).rightCols(a.dir_enc_dim);

  // Density head.
  const LayerShape& sd = shapes[static_cast<std::size_t>(a.hidden_layers)];
  const auto dsigma = upstream.col(0);
  weight_view_mut(grad_out, sd).noalias() = dsigma.transpose() * f.trunk.back();
  grad_out[sd.bias_offset] = dsigma.sum();
  dlast.noalias() += dsigma * weight_view(params, sd);

  // Trunk, output to input.
  MatX<Real> dh = std::move(dlast);
  MatX<Real> dprev;
  for (int l = a.hidden_layers - 1; l >= 0; --l) {
    const LayerShape& s = shapes[static_cast<std::size_t>(l)];
    dh.array() *= (f.trunk[static_cast<std::size_t>(l)].array() > Real(0)).template cast<Real>();
    auto wg = weight_view_mut(grad_out, s);
    const auto w = weight_view(params, s);
    bias_view_mut(grad_out, s) = dh.colwise().sum();
    if (l == 0) {
      wg.noalias() = dh.transpose() * pos;
      if (input_grad) input_grad->leftCols(a.pos_enc_dim).noalias() += dh * w;
    } else if (l == a.skip_after_layer) {
      wg.leftCols(a.width).noalias() = dh.transpose() * f.trunk[static_cast<std::size_t>(l - 1)];
      wg.rightCols(a.pos_enc_dim).noalias() = dh.transpose() * pos;
      if (input_grad)
        input_grad->leftCols(a.pos_enc_dim).noalias() += dh * w.rightCols(a.pos_enc_dim);
      dprev.noalias() = dh * w.leftCols(a.width);
      dh = std::move(dprev);
    } else {
      wg.noalias() = dh.transpose() * f.trunk[static_cast<std::size_t>(l - 1)];
      dprev.noalias() = dh * w;
      dh = std::move(dprev);
    }
  }
}

/// Convenience wrapper matching the one-call contract: forward pass plus, when
/// an upstream gradient is supplied, the exact reverse-mode weight gradient.
template <typename Real>
struct ForwardBackwardResult {
  MatX<Real> outputs;             // raw heads, n x 4
  std::vector<Real> grad;         // empty unless upstream given
  MatX<Real> input_grad;          // empty unless requested
};

template <typename Real>
ForwardBackwardResult<Real> mlp_forward_backward(std::span<const Real> params,
                                                 const MlpArchitecture& a, MatX<Real> inputs,
                                                 const MatX<Real>* upstream = nullptr,
                                                 bool want_input_grad = false) {
  ForwardBackwardResult<Real> r;
  MlpForward<Real> f = mlp_forward(params, a, std::move(inputs));
  if (upstream) {
    r.grad.assign(param_count(a), Real(0));
    mlp_backward<Real>(params, a, f, *upstream, r.grad,
                       want_input_grad ? &r.input_grad : nullptr);
  }
  r.outputs = std::move(f.raw);
  return r;
}

// ---------------------------------------------------------------------------
// Optimizer

struct OptimizerConfig {
  enum class Kind { adam, sgd };
  Kind kind = Kind::adam;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Real>
struct AdamState {
  std::vector<Real> first_moment;
  std::vector<Real> second_moment;
  std::int64_t step_count = 0;

  static AdamState zeros(std::size_t n) {
    AdamState s;
    s.first_moment.assign(n, Real(0));
    s.second_moment.assign(n, Real(0));
    return s;
  }
};

namespace detail {

template <typename Real>
void require_finite_grad(std::span<const Real> grad) {
  Eigen::Map<const VecX<Real>> g(grad.data(), static_cast<Eigen::Index>(grad.size()));
  if (g.allFinite()) return;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(static_cast<double>(grad[i])))
      throw NumericError("non-finite gradient entry at index " + std::to_string(i));
}

}  // namespace detail

/// Standard Adam with bias correction, in place. Throws NumericError naming
/// the first offending index if the gradient has non-finite entries.
template <typename Real>
void adam_step(std::span<Real> weights, std::span<const Real> grad, AdamState<Real>& state,
               const OptimizerConfig& cfg) {
  if (weights.size() != grad.size() || state.first_moment.size() != weights.size() ||
      state.second_moment.size() != weights.size())
    throw ContractError("adam_step: length mismatch");
  detail::require_finite_grad(grad);
  state.step_count += 1;
  const Real b1 = static_cast<Real>(cfg.beta1);
  const Real b2 = static_cast<Real>(cfg.beta2);
  const Real bc1 = static_cast<Real>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count)));
  const Real bc2 = static_cast<Real>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count)));
  const Real lr = static_cast<Real>(cfg.lr);
  const Real eps = static_cast<Real>(cfg.eps);
  const Eigen::Index n = static_cast<Eigen::Index>(weights.size());
  Eigen::Map<VecX<Real>> w(weights.data(), n);
  Eigen::Map<const VecX<Real>> g(grad.data(), n);
  Eigen::Map<VecX<Real>> m(state.first_moment.data(), n);
  Eigen::Map<VecX<Real>> v(state.second_moment.data(), n);
  m = b1 * m + (Real(1) - b1) * g;
  v = b2 * v + (Real(1) - b2) * g.cwiseProduct(g);
  w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

template <typename Real>
void sgd_step(std::span<Real> weights, std::span<const Real> grad, const OptimizerConfig& cfg) {
  if (weights.size() != grad.size()) throw ContractError("sgd_step: length mismatch");
  detail::require_finite_grad(grad);
  const Eigen::Index n = static_cast<Eigen::Index>(weights.size());
  Eigen::Map<VecX<Real>> w(weights.data(), n);
  Eigen::Map<const VecX<Real>> g(grad.data(), n);
  w -= static_cast<Real>(cfg.lr) * g;
}

/// Dispatching optimizer; Adam keeps per-parameter moments, SGD is stateless.
template <typename Real>
struct Optimizer {
  OptimizerConfig cfg;
  AdamState<Real> adam;

  explicit Optimizer(std::size_t dim, OptimizerConfig c = {})
      : cfg(c), adam(AdamState<Real>::zeros(dim)) {}

  void step(std::span<Real> weights, std::span<const Real> grad) {
    if (cfg.kind == OptimizerConfig::Kind::adam)
      adam_step<Real>(weights, grad, adam, cfg);
    else
      sgd_step<Real>(weights, grad, cfg);
  }
};

}  // namespace confield
