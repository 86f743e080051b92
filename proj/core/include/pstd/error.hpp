#pragma once

#include <stdexcept>
#include <string>

namespace pstd {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kEmptySample,
  kNotSymmetric,
  kFactorizationFailed,
  kRankDeficient,
  kFilterDivergence,
  kDivergentValue,
  kZeroProbability,
  kParse,
  kIo,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace pstd
