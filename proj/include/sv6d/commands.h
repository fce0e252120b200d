#pragma once

// The sv6d command line, as a library so that it can be driven in-process.

#include <iosfwd>
#include <string>
#include <vector>

#include "sv6d/error.h"

namespace sv6d::cli {

// Closed set of process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitViolations = 1,     // validate found problems
  kExitMalformedInput = 2, // unreadable JSON, schema errors, unknown labels, invalid documents
  kExitConfig = 3,         // bad configuration, plan, or taxonomy registry
  kExitUsage = 4,          // bad command line
  kExitOperation = 5,      // the wrapped operation rejected its input
  kExitUnsupported = 6,    // task type without a backing implementation
  kExitIo = 7,             // file or socket failure
};

int exit_code_for(ErrorKind kind) noexcept;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sv6d::cli
