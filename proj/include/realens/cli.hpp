#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>

namespace realens {

inline constexpr const char* kVersion = "0.1.0";

struct CommandOptions {
  std::string command;  // simulate | ode | reference | compare | align | classical
  std::filesystem::path config;
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  std::size_t workers = 1;
};

/// Runs one subcommand. manifest.json is written to `out` before anything else
/// (status "running") and rewritten at the end with status "ok" or "failed".
/// Returns the process exit code; errors are reported on `err`.
int run_command(const CommandOptions& options, std::ostream& err);

/// Parses argv and dispatches to run_command.
int cli_main(int argc, char** argv);

}  // namespace realens
