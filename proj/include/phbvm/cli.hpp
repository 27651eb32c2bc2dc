#pragma once

namespace phbvm {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitConfig = 2, kExitSolver = 3 };

/// Entry point of the `phbvm` tool: subcommands table, growth and step-debug,
/// or a named preset via --preset.
int run_cli(int argc, char** argv);

}  // namespace phbvm
