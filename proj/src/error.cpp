#include "divrec/error.hpp"

namespace divrec {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "domain_error";
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kConfiguration: return "configuration_error";
    case ErrorCode::kLookup: return "lookup_error";
    case ErrorCode::kPrecondition: return "precondition_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kDecode: return "decode_error";
    case ErrorCode::kDegenerate: return "degenerate_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown_error";
}

}  // namespace divrec
