#pragma once

#include <filesystem>
#include <string>

#include "probemb/evaluation.hpp"

namespace probemb {

/// JSON object with the EvalReport field names; group_stats is null when
/// absent. Output bytes are a deterministic function of the report.
std::string report_to_json(const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);

}  // namespace probemb
