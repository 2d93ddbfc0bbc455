#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "sclab/trainer.hpp"

namespace sclab::config {

// Flat `key = value` files, `#` starts a comment, blank lines ignored.
// Keys mirror the TrainConfig / OptimConfig / ScheduleSpec field names;
// comma-separated values turn a key into a sweep axis.
std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                 const std::string& origin = "<text>");
std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path);

// Single-run config; rejects comma lists and unknown keys.
train::TrainConfig train_config_from(const std::map<std::string, std::string>& kv);

// Sweep config: any numeric key holding a comma list becomes a grid axis;
// `master_seed` and `name` apply to the sweep itself.
train::SweepConfig sweep_config_from(const std::map<std::string, std::string>& kv);

}  // namespace sclab::config
