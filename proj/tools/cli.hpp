#pragma once

#include <iosfwd>

namespace hope::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Parses and runs one `hope` command. Never throws; failures map to ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace hope::cli
