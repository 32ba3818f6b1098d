#pragma once

#include "forge/io/dataset_stats.hpp"

#include <nlohmann/json.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace forge::cli {

/// Runs the command line `args` (without the program name). Data goes to
/// files or `out`; JSON-lines logs go to `err`. Returns the exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Point-count and instance-count distributions per class over the samples.
nlohmann::ordered_json stats_report(const io::DatasetStats& stats);
std::string stats_table(const io::DatasetStats& stats);

}  // namespace forge::cli
