#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace curvop::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  json extra = json::object();  // command flags merged over the config file (e.g. n, A, B)
};

/// Merges user config and overrides over the command defaults and validates the
/// result. Every key the command reads appears in the returned object.
json resolve_config(const std::string& command, const json& user, const Overrides& overrides);

/// FNV-1a over the compact dump of the resolved config.
std::string config_hash(const json& resolved);

struct CommandResult {
  int exit_code = kExitOk;
  std::string summary;
  std::map<std::string, std::string> files;  // file name -> contents
};

/// Runs a command on a resolved config. Test hooks live under "fault".
CommandResult run_command(const std::string& command, const json& resolved);

/// Strips the leading "# " provenance lines.
std::string csv_body(const std::string& csv);

}  // namespace curvop::cli
