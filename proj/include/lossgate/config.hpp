#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lossgate/trainer.hpp"

namespace lossgate {

// Flat `key = value` configuration. Blank lines and lines starting with '#'
// are ignored. Keys are listed in config_keys(); unknown keys are an error.
using ConfigPairs = std::vector<std::pair<std::string, std::string>>;

ConfigPairs parse_config_text(std::string_view text);
ConfigPairs read_config_file(const std::filesystem::path& path);

// Throws UsageError on an unknown key or a malformed value.
void apply_config_value(TrainerConfig& config, std::string_view key, std::string_view value);
void apply_config(TrainerConfig& config, const ConfigPairs& pairs);

// Every key with its current value, in config_keys() order. Round-trips
// through apply_config.
ConfigPairs config_to_pairs(const TrainerConfig& config);
const std::vector<std::string>& config_keys();

std::string format_double(double v);

}  // namespace lossgate
