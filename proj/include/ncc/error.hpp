#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ncc {

enum class ErrorCode {
  DuplicateName,
  InvalidName,
  UnknownName,
  IoError,
  MalformedRecord,
  EmptyCorpus,
  EmptyBatch,
  DedentMismatch,
  UnterminatedString,
  ColonWithoutBlock,
  UnexpectedIndent,
  ShapeMismatch,
  TargetOutOfRange,
  EmptyInput,
  BatchTooSmall,
  LengthMismatch,
  BadMagic,
  CorruptDirectory,
  DigestMismatch,
  ResolveFailure,
  DataMissing,
  NonFiniteLoss,
  BadConfig,
  InvalidArgument,
  UnsupportedOperation,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI exit codes, HTTP status mapping, tests) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ncc
