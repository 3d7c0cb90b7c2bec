// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sem {

enum class ErrorCode {
  UnclosedTag,
  MismatchedTag,
  NestedTag,
  EmptyTrajectory,
  InvalidSegment,
  NoAnswer,
  EmptyGoldSet,
  DuplicateId,
  InvalidCount,
  InvalidConfig,
  DimensionMismatch,
  GroupTooSmall,
  EmptyDataset,
  UnknownJudgeKind,
  MalformedInput,
  Io,
  Internal,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnclosedTag: return "UnclosedTag";
    case ErrorCode::MismatchedTag: return "MismatchedTag";
    case ErrorCode::NestedTag: return "NestedTag";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::InvalidSegment: return "InvalidSegment";
    case ErrorCode::NoAnswer: return "NoAnswer";
    case ErrorCode::EmptyGoldSet: return "EmptyGoldSet";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownJudgeKind: return "UnknownJudgeKind";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

/// Library-wide exception. Parse errors also carry the byte offset of the
/// offending tag.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

}  // namespace sem
