// Command-line front end: simulate, estimate and match.

#ifndef MASSFUSE_TOOLS_CLI_H_
#define MASSFUSE_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace massfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitEstimator = 3;

// args excludes the program name. Never throws; errors go to `err` and the
// exit code.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace massfuse::cli

#endif  // MASSFUSE_TOOLS_CLI_H_
