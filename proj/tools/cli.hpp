#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pneulogic::cli {

enum ExitCode : int {
    kOk = 0,
    kVerifyFailed = 1,
    kUsage = 2,     // usage, file and parse errors
    kCapacity = 3,  // program does not fit the device
};

// Runs `pneulogic <args...>` (args exclude the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pneulogic::cli
