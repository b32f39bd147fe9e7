#pragma once

#include <ostream>

namespace divrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Subcommands: ingest, recommend, embed, simulate, serve.
/// Returns 0 on success, 1 on validation/runtime failure, 2 on usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace divrec::cli
