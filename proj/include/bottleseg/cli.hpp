#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace bottleseg::cli {

// Exit status contract of the `bottleseg` binary.
enum ExitCode : int {
  kOk = 0,
  kFindings = 1,    // validation failures, plan violations, rejected inputs
  kUsage = 2,       // bad flags or missing required options
  kInputError = 3,  // unreadable or malformed input files
};

// Runs one invocation; args excludes the program name.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace bottleseg::cli
