#pragma once

#include <stdexcept>
#include <string>

namespace semcrypt {

// Broad failure classes.  The numeric value doubles as the process exit code,
// so keep it in sync with the table in README.md.
enum class ErrorClass : int {
  Usage = 1,     // bad invocation, missing arguments, empty inputs
  Data = 2,      // malformed or truncated input data
  Crypto = 3,    // authentication or key failures
  Access = 4,    // policy denied the operation
  Internal = 5,  // invariant violation inside the library
};

enum class Err {
  // usage
  UsageError,
  EmptyPassphrase,
  EmptyPayload,
  // data / format
  MissingMagic,
  TruncatedElement,
  UnsupportedTransferSyntax,
  MissingRequiredTag,
  PixelDataSizeMismatch,
  BadMagic,
  CorruptPayload,
  HeaderFieldOutOfRange,
  DimensionTooSmall,
  ImageTooSmall,
  DimensionMismatch,
  ShapeMismatch,
  ShapeHeaderMismatch,
  EmptyInput,
  SingleClassDataset,
  BlockSizeMismatch,
  NotFound,
  IdCollision,
  IoError,
  // crypto
  InvalidKeyLength,
  BadPadding,
  MacMismatch,
  // access
  AccessDenied,
  // internal
  Internal,
};

constexpr ErrorClass error_class(Err e) {
  switch (e) {
    case Err::UsageError:
    case Err::EmptyPassphrase:
    case Err::EmptyPayload:
      return ErrorClass::Usage;
    case Err::InvalidKeyLength:
    case Err::BadPadding:
    case Err::MacMismatch:
      return ErrorClass::Crypto;
    case Err::AccessDenied:
      return ErrorClass::Access;
    case Err::Internal:
      return ErrorClass::Internal;
    default:
      return ErrorClass::Data;
  }
}

constexpr const char* error_name(Err e) {
  switch (e) {
    case Err::UsageError: return "UsageError";
    case Err::EmptyPassphrase: return "EmptyPassphrase";
    case Err::EmptyPayload: return "EmptyPayload";
    case Err::MissingMagic: return "MissingMagic";
    case Err::TruncatedElement: return "TruncatedElement";
    case Err::UnsupportedTransferSyntax: return "UnsupportedTransferSyntax";
    case Err::MissingRequiredTag: return "MissingRequiredTag";
    case Err::PixelDataSizeMismatch: return "PixelDataSizeMismatch";
    case Err::BadMagic: return "BadMagic";
    case Err::CorruptPayload: return "CorruptPayload";
    case Err::HeaderFieldOutOfRange: return "HeaderFieldOutOfRange";
    case Err::DimensionTooSmall: return "DimensionTooSmall";
    case Err::ImageTooSmall: return "ImageTooSmall";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::ShapeHeaderMismatch: return "ShapeHeaderMismatch";
    case Err::EmptyInput: return "EmptyInput";
    case Err::SingleClassDataset: return "SingleClassDataset";
    case Err::BlockSizeMismatch: return "BlockSizeMismatch";
    case Err::NotFound: return "NotFound";
    case Err::IdCollision: return "IdCollision";
    case Err::IoError: return "IoError";
    case Err::InvalidKeyLength: return "InvalidKeyLength";
    case Err::BadPadding: return "BadPadding";
    case Err::MacMismatch: return "MacMismatch";
    case Err::AccessDenied: return "AccessDenied";
    case Err::Internal: return "Internal";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg)
      : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code) {}

  Err code() const { return code_; }
  ErrorClass cls() const { return error_class(code_); }
  int exit_code() const { return static_cast<int>(cls()); }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Err code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace semcrypt
