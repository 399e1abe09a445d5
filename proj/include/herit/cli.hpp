#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace herit {

// Runs the `herit` command line. args excludes the program name. JSON goes to
// `out`, diagnostics to `err`. Returns the process exit code: 0 on success,
// 1 for usage or configuration problems, 2 for data or numerical failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Reads HERIT_LOG (trace, debug, info, warn, error, off) and routes log
// output to stderr.
void configure_logging();

} // namespace herit
