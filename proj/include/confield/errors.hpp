// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace confield {

/// Violated call contract: bad shapes, out-of-range arguments, invalid
/// configuration values.
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed external input: wire payloads, dataset files, configs.
class ParseError : public std::runtime_error {
 public:
  enum class Code {
    bad_magic,
    truncated,
    length_mismatch,
    bad_value,
    io,
  };

  ParseError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Numeric failure during training or evaluation (non-finite loss/gradient).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace confield
