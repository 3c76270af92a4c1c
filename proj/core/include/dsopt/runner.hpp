#pragma once

// Subcommand orchestration: builds the dataset from the config, dispatches
// training/evaluation jobs, and writes every artifact (resolved config echo,
// checkpoints, histories, metric tables, simulator ledger, summary) into the
// run's output directory. Every table carries the config hash and seed list
// in a header comment; no artifact contains a timestamp, so identical config
// and seed reproduce identical bytes.

#include <string>
#include <vector>

#include "dsopt/config.hpp"

namespace dsopt {

const std::vector<std::string>& known_subcommands();

// Executes one subcommand; throws ConfigError / DataError / NumericError on
// failure. Artifacts land under cfg.out_dir.
void run_command(const std::string& subcommand, const RunConfig& cfg);

// Dataset assembly from the config (synthetic generation or CSV ingestion
// with the schema map). Exposed for tests and the report path.
SeriesBundle build_bundle(const RunConfig& cfg);

}  // namespace dsopt
