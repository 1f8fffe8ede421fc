#pragma once

#include "coughdetect/pipeline.hpp"

#include <map>
#include <string>

namespace coughdetect {

// Flat "section.key" -> raw value view of a config file. TOML files use
// [section] tables with key = value pairs; JSON files use one level of
// nesting. Array values normalize to "[a, b]".
std::map<std::string, std::string> read_config_file(const std::string& path);

// Overrides from COUGHDETECT_<SECTION>_<KEY> environment variables.
std::map<std::string, std::string> read_config_env();

// Applies known keys onto the bundle; unknown keys raise.
void apply_config(AppConfig& cfg, const std::map<std::string, std::string>& values);

// defaults <- file <- environment (flags are the caller's business)
AppConfig load_app_config(const std::string& config_path /* may be empty */);

}  // namespace coughdetect
