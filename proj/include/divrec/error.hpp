#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace divrec {

enum class ErrorCode {
  kDomain,         // argument outside a function's mathematical domain
  kValidation,     // input data violates a documented invariant
  kConfiguration,  // unusable configuration (e.g. all weights zero)
  kLookup,         // unknown id
  kPrecondition,   // caller broke an operation's precondition
  kNotFound,       // persisted object absent
  kConflict,       // request inconsistent with current state
  kDecode,         // persisted record could not be parsed
  kDegenerate,     // result is undefined for these inputs
  kIo,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace divrec
