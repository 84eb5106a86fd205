#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cogload {

// Entry point of the `cogload` tool. `args` excludes the program name.
// Returns 0 on success, 1 on a pipeline or IO failure, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cogload
