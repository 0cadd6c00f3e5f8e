#pragma once

namespace nep::cli {

// Full command-line entry point; returns the process exit code.
// 0 success, 2 input contract violation, 3 IO failure, 4 artifact version
// mismatch.
int run(int argc, const char* const* argv);

}  // namespace nep::cli
