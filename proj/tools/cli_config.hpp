#pragma once

#include "hdoms/kv_config.hpp"
#include "hdoms/pipeline.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace hdoms::cli {

/// Keys accepted in --config files and set by the matching command line flags.
const std::set<std::string>& pipeline_keys();

/// Merges defaults < config file < flag overrides into a validated pipeline
/// configuration. Unknown keys in either layer raise ConfigError.
PipelineConfig merge_pipeline_config(const std::filesystem::path& config_file,
                                     const std::map<std::string, std::string>& overrides);

/// Converts an already merged key/value set. Relative noise_config paths resolve against base_dir.
PipelineConfig pipeline_config_from(const KvConfig& kv, const std::filesystem::path& base_dir = {});

}  // namespace hdoms::cli
