#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmtnm/nm_measures.hpp"
#include "rmtnm/sweep.hpp"

namespace rmtnm {

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnvVar = "RMTNM_CONFIG";

// Exit codes: 0 success, 1 user error, 2 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

nlohmann::json report_to_json(const NMReport& report, const ModelParams& params, const RunOptions& options);

void write_criteria_csv(std::ostream& os, const Analysis& analysis);

} // namespace rmtnm
