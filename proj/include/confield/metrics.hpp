// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "confield/errors.hpp"
#include "confield/graph.hpp"
#include "confield/image.hpp"
#include "confield/mlp.hpp"

namespace confield {

inline constexpr double kPsnrCap = 99.0;

/// Peak signal-to-noise ratio in dB for images in [0,1]; MSE below 1e-10 maps
/// to the 99 dB cap so reports stay numeric.
inline double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ContractError("psnr: image shapes differ");
  double se = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.rgb.size());
  if (mse < 1e-10) return kPsnrCap;
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline std::vector<double> luma(const Image& img) {
  std::vector<double> y(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] + 0.114 * img.rgb[3 * i + 2];
  }
  return y;
}

inline const std::vector<double>& ssim_window() {
  static const std::vector<double> w = [] {
    std::vector<double> win(121);
    double sum = 0.0;
    for (int dy = -5; dy <= 5; ++dy) {
      for (int dx = -5; dx <= 5; ++dx) {
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
        win[static_cast<std::size_t>((dy + 5) * 11 + (dx + 5))] = g;
        sum += g;
      }
    }
    for (double& v : win) v /= sum;
    return win;
  }();
  return w;
}

}  // namespace detail

/// Mean local SSIM on luma (Rec. 601 weights), 11x11 Gaussian window with
/// sigma 1.5, K1=0.01, K2=0.03, L=1. Windows are evaluated only where they fit
/// entirely inside the image.
inline double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ContractError("ssim: image shapes differ");
  if (a.width < 11 || a.height < 11)
    throw ContractError("ssim: image must be at least 11x11");
  const std::vector<double> x = detail::luma(a);
  const std::vector<double> y = detail::luma(b);
  const std::vector<double>& win = detail::ssim_window();
  constexpr double C1 = 0.01 * 0.01;
  constexpr double C2 = 0.03 * 0.03;

  double total = 0.0;
  std::size_t count = 0;
  for (int cy = 5; cy < a.height - 5; ++cy) {
    for (int cx = 5; cx < a.width - 5; ++cx) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      std::size_t wi = 0;
      for (int dy = -5; dy <= 5; ++dy) {
        const std::size_t row = static_cast<std::size_t>(cy + dy) * a.width + (cx - 5);
        for (int dx = 0; dx < 11; ++dx, ++wi) {
          const double w = win[wi];
          const double xv = x[row + static_cast<std::size_t>(dx)];
          const double yv = y[row + static_cast<std::size_t>(dx)];
          mx += w * xv;
          my += w * yv;
          mxx += w * (xv * xv);
          myy += w * (yv * yv);
          mxy += w * (xv * yv);  // symmetric product first keeps ssim(a,b)==ssim(b,a) exact
        }
      }
      const double vx = mxx - mx * mx;
      const double vy = myy - my * my;
      const double cov = mxy - mx * my;
      total += ((2 * mx * my + C1) * (2 * cov + C2)) /
               ((mx * mx + my * my + C1) * (vx + vy + C2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

/// Consensus violation: max over graph edges of the L2 distance between the
/// incident agents' weight vectors.
template <typename Real>
double disagreement_norm(const std::vector<std::vector<Real>>& weights, const CommGraph& graph) {
  if (static_cast<int>(weights.size()) != graph.n_agents)
    throw ContractError("disagreement_norm: weight count differs from agent count");
  for (const auto& w : weights)
    if (w.size() != weights.front().size())
      throw ContractError("disagreement_norm: weight vectors differ in length");
  double worst = 0.0;
  for (auto [i, j] : graph.edges) {
    const auto& wi = weights[static_cast<std::size_t>(i)];
    const auto& wj = weights[static_cast<std::size_t>(j)];
    double sq = 0.0;
    for (std::size_t k = 0; k < wi.size(); ++k) {
      const double d = static_cast<double>(wi[k]) - static_cast<double>(wj[k]);
      sq += d * d;
    }
    worst = std::max(worst, std::sqrt(sq));
  }
  return worst;
}

/// Per-trunk-layer L2 norms (weights plus bias) of a gradient, ordered input
/// to output. One entry per hidden layer.
template <typename Real>
std::vector<double> layer_grad_norms(std::span<const Real> grad, const MlpArchitecture& arch) {
  if (grad.size() != param_count(arch))
    throw ContractError("layer_grad_norms: gradient length does not match architecture");
  const auto shapes = layer_table(arch);
  std::vector<double> norms(static_cast<std::size_t>(arch.hidden_layers));
  for (int l = 0; l < arch.hidden_layers; ++l) {
    const LayerShape& s = shapes[static_cast<std::size_t>(l)];
    double sq = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double v = static_cast<double>(grad[s.weight_offset + i]);
      sq += v * v;
    }
    norms[static_cast<std::size_t>(l)] = std::sqrt(sq);
  }
  return norms;
}

/// L2 norm of the whole trunk slice of a gradient (all hidden layers).
template <typename Real>
double trunk_grad_norm(std::span<const Real> grad, const MlpArchitecture& arch) {
  if (grad.size() != param_count(arch))
    throw ContractError("trunk_grad_norm: gradient length does not match architecture");
  const auto shapes = layer_table(arch);
  const LayerShape& last = shapes[static_cast<std::size_t>(arch.hidden_layers - 1)];
  const std::size_t end = last.bias_offset + static_cast<std::size_t>(last.out);
  double sq = 0.0;
  for (std::size_t i = 0; i < end; ++i) {
    const double v = static_cast<double>(grad[i]);
    sq += v * v;
  }
  return std::sqrt(sq);
}

}  // namespace confield
