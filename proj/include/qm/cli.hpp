#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qm {

// Exit codes: 0 success, 1 model/validation/data errors, 2 I/O or parse
// failures (including bad command lines), 3 internal invariant breaches.
// Diagnostics go to `err`, data to `out` or to files.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qm
