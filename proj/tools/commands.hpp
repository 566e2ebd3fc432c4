#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kelly::cli {

inline constexpr int exit_success = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_solver = 3;

// Entry point shared by the executable and the tests. `args` excludes the
// program name. Reports go to `out` unless --out names a file.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// '{:.10g}' with negative zero printed as 0; the CSV cell format.
std::string format_value(double v);

}  // namespace kelly::cli
