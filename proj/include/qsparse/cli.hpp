#pragma once

#include <iosfwd>

namespace qsparse::cli {

// Exit status of run(): success, a property of the data (e.g. NoBracket),
// or a malformed invocation. Errors are reported as one JSON object on `err`.
enum ExitCode : int { kOk = 0, kDomainError = 1, kUsageError = 2 };

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace qsparse::cli
