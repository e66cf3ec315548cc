#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nanomvg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// args excludes the program name. Output goes to `out`, diagnostics and
// usage errors to `err`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace nanomvg
