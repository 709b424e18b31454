#pragma once

#include <string>

#include "spinflow/config.hpp"

namespace spinflow {

inline constexpr const char* kVersion = "0.1.0";

// Dispatches one subcommand; throws ConfigError / BudgetExceeded /
// NumericFailure for the distinct CLI exit codes. A manifest is written as
// soon as the config has parsed, before any work runs.
void run_experiment(const RunConfig& cfg, const std::string& subcommand,
                    const std::string& outdir);

void write_schema(const std::string& outdir);

}  // namespace spinflow
