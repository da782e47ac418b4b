// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imagine {

enum class ErrorCode {
  InvalidArgument,
  FullHole,
  WrongFocus,
  SegmentationFailed,
  DegenerateRect,
  DegenerateCamera,
  MaskShapeMismatch,
  NoVotes,
  ProviderUnavailable,
  ProviderRejected,
  Timeout,
  BudgetExhausted,
  PackingFailed,
  MalformedDataset,
  SchemaMismatch,
  UnparsableAnswer,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace imagine
