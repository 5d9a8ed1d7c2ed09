// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "confield/errors.hpp"
#include "confield/mlp.hpp"

namespace confield {

// "NWV1" weight payload: 4-byte magic, six little-endian u32 header fields
// (hidden_layers, width, skip_after_layer, pos_enc_dim, dir_enc_dim,
// precision), then the parameters as little-endian IEEE-754 reals in
// layer-major layout.

enum class WirePrecision : std::uint32_t { f32 = 0, f64 = 1 };

inline constexpr std::size_t kWireHeaderBytes = 28;
inline constexpr char kWireMagic[4] = {'N', 'W', 'V', '1'};

inline std::size_t wire_scalar_bytes(WirePrecision p) {
  return p == WirePrecision::f32 ? 4 : 8;
}

/// Total payload size for a parameter vector of the given length.
inline std::size_t wire_size_bytes(std::size_t param_count, WirePrecision p) {
  return kWireHeaderBytes + param_count * wire_scalar_bytes(p);
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  return static_cast<std::uint32_t>(in[at]) | (static_cast<std::uint32_t>(in[at + 1]) << 8) |
         (static_cast<std::uint32_t>(in[at + 2]) << 16) |
         (static_cast<std::uint32_t>(in[at + 3]) << 24);
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xffffffffull));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
  return static_cast<std::uint64_t>(get_u32(in, at)) |
         (static_cast<std::uint64_t>(get_u32(in, at + 4)) << 32);
}

}  // namespace detail

template <typename Real>
std::vector<std::uint8_t> serialize_weights(std::span<const Real> weights,
                                            const MlpArchitecture& arch) {
  static_assert(sizeof(Real) == 4 || sizeof(Real) == 8);
  const WirePrecision prec = sizeof(Real) == 4 ? WirePrecision::f32 : WirePrecision::f64;
  if (weights.size() != param_count(arch))
    throw ContractError("serialize_weights: weight length does not match architecture");
  std::vector<std::uint8_t> out;
  out.reserve(wire_size_bytes(weights.size(), prec));
  out.insert(out.end(), kWireMagic, kWireMagic + 4);
  detail::put_u32(out, static_cast<std::uint32_t>(arch.hidden_layers));
  detail::put_u32(out, static_cast<std::uint32_t>(arch.width));
  detail::put_u32(out, static_cast<std::uint32_t>(arch.skip_after_layer));
  detail::put_u32(out, static_cast<std::uint32_t>(arch.pos_enc_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(arch.dir_enc_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(prec));
  for (const Real v : weights) {
    if constexpr (sizeof(Real) == 4)
      detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    else
      detail::put_u64(out, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
  }
  return out;
}

/// Decoded payload. Values are widened to double (exact for both precisions);
/// `precision` records the wire representation.
struct LoadedWeights {
  MlpArchitecture arch;
  WirePrecision precision = WirePrecision::f32;
  std::vector<double> values;

  template <typename Real>
  std::vector<Real> as() const {
    std::vector<Real> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<Real>(values[i]);
    return out;
  }
};

inline LoadedWeights deserialize_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWireHeaderBytes)
    throw ParseError(ParseError::Code::truncated, "NWV1 payload shorter than header");
  if (std::memcmp(bytes.data(), kWireMagic, 4) != 0)
    throw ParseError(ParseError::Code::bad_magic, "bad magic, expected NWV1");
  LoadedWeights lw;
  lw.arch.hidden_layers = static_cast<int>(detail::get_u32(bytes, 4));
  lw.arch.width = static_cast<int>(detail::get_u32(bytes, 8));
  lw.arch.skip_after_layer = static_cast<int>(detail::get_u32(bytes, 12));
  lw.arch.pos_enc_dim = static_cast<int>(detail::get_u32(bytes, 16));
  lw.arch.dir_enc_dim = static_cast<int>(detail::get_u32(bytes, 20));
  const std::uint32_t prec_raw = detail::get_u32(bytes, 24);
  if (prec_raw > 1)
    throw ParseError(ParseError::Code::bad_value,
                     "unknown precision flag " + std::to_string(prec_raw));
  lw.precision = static_cast<WirePrecision>(prec_raw);
  try {
    lw.arch.validate();
  } catch (const ContractError& e) {
    throw ParseError(ParseError::Code::bad_value, std::string("invalid architecture header: ") + e.what());
  }
  const std::size_t n = param_count(lw.arch);
  const std::size_t expect = wire_size_bytes(n, lw.precision);
  if (bytes.size() < expect)
    throw ParseError(ParseError::Code::truncated,
                     "truncated payload: have " + std::to_string(bytes.size()) + " bytes, header implies " +
                         std::to_string(expect));
  if (bytes.size() > expect)
    throw ParseError(ParseError::Code::length_mismatch,
                     "payload length mismatch: have " + std::to_string(bytes.size()) +
                         " bytes, header implies " + std::to_string(expect));
  lw.values.resize(n);
  std::size_t at = kWireHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) {
    if (lw.precision == WirePrecision::f32) {
      lw.values[i] = std::bit_cast<float>(detail::get_u32(bytes, at));
      at += 4;
    } else {
      lw.values[i] = std::bit_cast<double>(detail::get_u64(bytes, at));
      at += 8;
    }
  }
  return lw;
}

}  // namespace confield
