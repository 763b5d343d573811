#pragma once

#include <string>

#include "config.hpp"

namespace riskshare::cli {

/// Executes one subcommand, writing its artifacts plus a run manifest under
/// cfg.out_dir. Throws riskshare::Error on failure; ConfigError/IoError mark
/// configuration problems (exit code 2), anything else an estimation failure
/// (exit code 1).
void run_command(const PipelineConfig& cfg, const std::string& command);

}  // namespace riskshare::cli
