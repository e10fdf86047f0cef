#pragma once

#include "dgreg/optimize.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dgreg {

/// Registration run read from JSON. Relative paths resolve against the
/// directory holding the config file.
struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path target;
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> affine_input;
    std::optional<std::filesystem::path> affine_registration;
    std::optional<std::filesystem::path> affine_target;
    std::vector<StageConfig> stages;
    std::uint64_t seed = 0;
    bool crop = false;
    int pad = 2;
    bool normalize = false;
    double lo_percentile = 1.0;
    double hi_percentile = 99.0;
};

/// Throws ConfigError on malformed JSON, unknown keys, missing files or
/// invalid stage parameters.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir);
StageConfig parse_stage(const std::string& json_text);

} // namespace dgreg
