#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "modelsearch/metrics.hpp"

namespace modelsearch::cli {

/// Runs the command line `args` (without the program name). Returns the exit
/// status; failures are reported on `err` as `ERROR <code>: <detail>`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Relative-regret bar chart for one pool: one row per strategy, one bar
/// group per task colored by task group, B=1 drawn light and B=2 solid.
std::string render_regret_svg(const std::string& pool_id, const std::vector<std::string>& strategy_ids,
                              const std::vector<RegretRow>& rows);

}  // namespace modelsearch::cli
