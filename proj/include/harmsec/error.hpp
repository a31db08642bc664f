#pragma once

#include <stdexcept>
#include <string>

namespace harmsec {

enum class ErrorCode {
  Syntax = 1,
  UnknownFunction,
  UnboundVariable,
  Domain,
  SingularMetric,
  BasePointMismatch,
  SingularFiberBlock,
  NonSymmetricConnection,
  UnknownGalleryName,
  InvalidHorizon,
  NonVerticalForm,
  StepUnstable,
  InvalidGeometry,
  InvalidArgument,
  Io,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure; `offset` is the byte offset of the offending token.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& expected)
      : Error(ErrorCode::Syntax, "syntax error at byte " +
                                     std::to_string(offset) + ": expected " +
                                     expected),
        offset_(offset), expected_(expected) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

}  // namespace harmsec
