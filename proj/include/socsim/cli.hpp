#pragma once

// Command-line front end: run, replay, metrics, stats, serve.
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <iosfwd>
#include <string>
#include <vector>

namespace socsim {

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace socsim
