// Subcommands of the depthpose tool. Exit codes: 0 success, 1 I/O or parse
// error, 2 domain error (degenerate or insufficient input).
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace depthpose::cli {

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitDomain = 2 };

/// Full command line, argv[0] included. Normal output goes to `out`,
/// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

/// Convenience for tests: run({"depthpose", "estimate", ...}).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

/// Worker count for bench: DEPTHPOSE_THREADS if set and positive, else 1.
int threads_from_env();

}  // namespace depthpose::cli
