#pragma once

namespace miaudit {

/// Entry point behind the command-line tool. Returns the process exit
/// code: 0 on success, 2 on configuration errors, 1 on runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace miaudit
