#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace doe::cli {

/// Run the command-line front end. Exit codes: 0 clean, 1 diagnostics with
/// errors, 2 usage or parse failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace doe::cli
