#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "lossgate/trainer.hpp"

namespace lossgate {

// Report JSON. Optional quantities that are undefined for the run (agot
// without a reference accuracy, l_low before the threshold froze) are null.
nlohmann::json report_to_json(const RunReport& report);
// Config keys mapped to JSON values; numbers and booleans keep their type.
nlohmann::json config_to_json(const TrainerConfig& config);

void write_report(const RunReport& report, const std::filesystem::path& path);

// One human-readable line: mode, accuracy, skip fractions, T_norm, AGOT.
std::string summary_line(const RunReport& report);

}  // namespace lossgate
