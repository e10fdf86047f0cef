#include "dgreg/config.hpp"

#include "dgreg/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace dgreg {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
void read_key(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for '" + key + "'");
    }
}

StageConfig stage_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + ": stage must be an object");
    }
    reject_unknown(j,
                   {"alpha", "beta", "gamma", "delta", "epsilon", "steps", "final_time", "max_iterations", "memory",
                    "c1", "c2", "gtol_relative", "cg_tol", "jacobi"},
                   where);
    StageConfig s;
    read_key(j, "alpha", s.alpha, where);
    read_key(j, "beta", s.beta, where);
    read_key(j, "gamma", s.gamma, where);
    if (j.contains("delta") && !j["delta"].is_null()) {
        double d = 0.0;
        read_key(j, "delta", d, where);
        s.delta = d;
    }
    read_key(j, "epsilon", s.epsilon, where);
    read_key(j, "steps", s.steps, where);
    read_key(j, "final_time", s.final_time, where);
    read_key(j, "max_iterations", s.max_iterations, where);
    read_key(j, "memory", s.memory, where);
    read_key(j, "c1", s.c1, where);
    read_key(j, "c2", s.c2, where);
    read_key(j, "gtol_relative", s.gtol_relative, where);
    read_key(j, "cg_tol", s.cg_tol, where);
    read_key(j, "jacobi", s.jacobi, where);
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return s;
}

json parse_text(const std::string& text, const std::string& where) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(where + ": malformed JSON: " + e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

StageConfig parse_stage(const std::string& json_text) { return stage_from_json(parse_text(json_text, "stage"), "stage"); }

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    const json j = parse_text(json_text, "config");
    if (!j.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    reject_unknown(j,
                   {"input", "target", "output_dir", "affine_input", "affine_registration", "affine_target", "stages",
                    "seed", "crop", "pad", "normalize", "percentiles"},
                   "config");
    RunConfig cfg;
    for (const char* key : {"input", "target", "output_dir"}) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw ConfigError(std::string("config: '") + key + "' must be a path string");
        }
    }
    cfg.input = resolve(base_dir, j["input"].get<std::string>());
    cfg.target = resolve(base_dir, j["target"].get<std::string>());
    cfg.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    auto optional_path = [&](const char* key, std::optional<std::filesystem::path>& out) {
        if (j.contains(key)) {
            if (!j[key].is_string()) {
                throw ConfigError(std::string("config: '") + key + "' must be a path string");
            }
            out = resolve(base_dir, j[key].get<std::string>());
        }
    };
    optional_path("affine_input", cfg.affine_input);
    optional_path("affine_registration", cfg.affine_registration);
    optional_path("affine_target", cfg.affine_target);
    read_key(j, "seed", cfg.seed, "config");
    read_key(j, "crop", cfg.crop, "config");
    read_key(j, "pad", cfg.pad, "config");
    read_key(j, "normalize", cfg.normalize, "config");
    if (j.contains("percentiles")) {
        const auto& p = j["percentiles"];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw ConfigError("config: 'percentiles' must be [lo, hi]");
        }
        cfg.lo_percentile = p[0].get<double>();
        cfg.hi_percentile = p[1].get<double>();
        if (!(cfg.lo_percentile >= 0.0 && cfg.lo_percentile < cfg.hi_percentile && cfg.hi_percentile <= 100.0)) {
            throw ConfigError("config: need 0 <= lo < hi <= 100 percentiles");
        }
    }
    if (cfg.pad < 0) {
        throw ConfigError("config: 'pad' must be >= 0");
    }
    if (!j.contains("stages") || !j["stages"].is_array() || j["stages"].empty()) {
        throw ConfigError("config: 'stages' must be a non-empty array");
    }
    for (std::size_t i = 0; i < j["stages"].size(); ++i) {
        cfg.stages.push_back(stage_from_json(j["stages"][i], "stage " + std::to_string(i + 1)));
    }
    std::vector<std::filesystem::path> files{cfg.input, cfg.target};
    for (const auto* p : {&cfg.affine_input, &cfg.affine_registration, &cfg.affine_target}) {
        if (*p) {
            files.push_back(**p);
        }
    }
    for (const auto& f : files) {
        if (!std::filesystem::exists(f)) {
            throw ConfigError("config: file not found: " + f.string());
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.parent_path());
}

} // namespace dgreg
