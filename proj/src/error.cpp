#include "ncc/error.hpp"

namespace ncc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::InvalidName: return "InvalidName";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::DedentMismatch: return "DedentMismatch";
    case ErrorCode::UnterminatedString: return "UnterminatedString";
    case ErrorCode::ColonWithoutBlock: return "ColonWithoutBlock";
    case ErrorCode::UnexpectedIndent: return "UnexpectedIndent";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TargetOutOfRange: return "TargetOutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::CorruptDirectory: return "CorruptDirectory";
    case ErrorCode::DigestMismatch: return "DigestMismatch";
    case ErrorCode::ResolveFailure: return "ResolveFailure";
    case ErrorCode::DataMissing: return "DataMissing";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedOperation: return "UnsupportedOperation";
  }
  return "Unknown";
}

}  // namespace ncc
