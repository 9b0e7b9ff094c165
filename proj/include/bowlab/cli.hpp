#pragma once

#include <string>
#include <vector>

namespace bowlab::cli {

// Runs one subcommand. args excludes argv[0].
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
int dispatch(const std::vector<std::string>& args);

}  // namespace bowlab::cli
