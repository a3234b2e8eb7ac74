#pragma once

// The `paris` command line: synth, fit, recommend, evaluate, export, serve.

#include <iosfwd>
#include <string>
#include <vector>

#include "paris/error.hpp"

namespace paris::cli {

// 0 ok, 1 empty result, 2 input error, 3 unknown entity, 4 domain error.
enum ExitCode : int { kOk = 0, kEmpty = 1, kInputError = 2, kUnknownEntity = 3, kDomainError = 4 };

int exit_code_for(ErrorCode code) noexcept;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace paris::cli
