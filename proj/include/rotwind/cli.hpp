#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rotwind {

/// Exit codes of the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // unexpected internal error
  kExitConfig = 2,      // usage, parse or validation error
  kExitNumerical = 3,   // solver divergence or hypothesis violation
};

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::string> out;  // --out; beats ROTWIND_OUT and the config's output_dir
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool rebuild_cache = false;
};

const std::vector<std::string>& subcommands();

/// Output directory: --out, then $ROTWIND_OUT, then the config's output_dir, then "rotwind_out".
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                         const std::string& config_value);

/// Runs one subcommand. Summary lines go to `out`; on failure a one-line error JSON
/// {"error": {"kind", "path", "message"}} goes to `err`.
int run(const std::string& subcommand, const RunOptions& opt, std::ostream& out,
        std::ostream& err);

/// argv front end.
int cli_main(int argc, char** argv);

}  // namespace rotwind
