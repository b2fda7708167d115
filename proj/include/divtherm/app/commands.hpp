#pragma once

// Pipelines behind the CLI subcommands. Each command writes its artifacts
// into ctx.out_dir and returns the report it wrote as JSON.

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "divtherm/app/config.hpp"
#include "divtherm/app/record_io.hpp"

namespace divtherm::app {

struct CommandContext {
  RunConfig cfg;
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::csv;
  std::ostream* log = nullptr;  // human-readable summary, optional
  // fit only
  std::string input;
  std::string model;
};

const std::vector<std::string>& command_names();
const std::vector<std::string>& fit_model_names();

nlohmann::json cmd_saturation(const CommandContext& ctx);
nlohmann::json cmd_odmr(const CommandContext& ctx);
nlohmann::json cmd_dvst(const CommandContext& ctx);
nlohmann::json cmd_coherence(const CommandContext& ctx);
nlohmann::json cmd_sensitivity(const CommandContext& ctx);
nlohmann::json cmd_monitor(const CommandContext& ctx);
nlohmann::json cmd_fit(const CommandContext& ctx);

/// Dispatch by subcommand name; ConfigError for an unknown name.
nlohmann::json run_command(const std::string& name, const CommandContext& ctx);

/// Profile rows of the synthetic day: mean + amplitude sin(2 pi t / duration).
std::vector<ProfileRow> synthetic_profile(const SyntheticProfile& p);

}  // namespace divtherm::app
