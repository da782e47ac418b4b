// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include "imagine/error.hpp"

namespace imagine {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FullHole: return "FullHole";
    case ErrorCode::WrongFocus: return "WrongFocus";
    case ErrorCode::SegmentationFailed: return "SegmentationFailed";
    case ErrorCode::DegenerateRect: return "DegenerateRect";
    case ErrorCode::DegenerateCamera: return "DegenerateCamera";
    case ErrorCode::MaskShapeMismatch: return "MaskShapeMismatch";
    case ErrorCode::NoVotes: return "NoVotes";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::ProviderRejected: return "ProviderRejected";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::PackingFailed: return "PackingFailed";
    case ErrorCode::MalformedDataset: return "MalformedDataset";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnparsableAnswer: return "UnparsableAnswer";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace imagine
