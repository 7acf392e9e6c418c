#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace datamix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `datamix` binary. Returns 0 on success, 1 on
// validation or input errors (diagnostics on `err`), 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const std::vector<std::string>& subcommand_names();

}  // namespace datamix::cli
