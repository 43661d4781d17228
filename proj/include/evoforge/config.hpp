#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "evoforge/core.hpp"
#include "evoforge/engine.hpp"

// Config file handling for the CLI. JSON with config_version 1, schema
// validated before any work: unknown keys are rejected at every level and
// relative instance paths are resolved against the config file's directory.
namespace evoforge::cli {

struct CliOverrides {
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend; // http | scripted | synthetic
    std::optional<std::filesystem::path> script;
};

struct ConfigFile {
    RunConfig run;
    nlohmann::json problem_spec;    // resolved "problem" or "training" object
    std::filesystem::path output_dir;
    nlohmann::json resolved;        // full config with absolute paths (stored in Meta)
};

ConfigFile load_config(const std::filesystem::path& path, const CliOverrides& overrides = {});

// Rebuilds a ConfigFile from the resolved JSON a run stored in its Meta
// record (paths are already absolute).
ConfigFile config_from_json(const nlohmann::json& resolved);

// Loads or generates the problem / training set named by the config.
engine::ProblemContext build_problem(const ConfigFile& config);

// Instantiates both backend roles. When both roles are scripted from the
// same source, one shared backend serves them so playback order matches the
// original interleaving.
engine::BackendSet build_backends(const ConfigFile& config);

} // namespace evoforge::cli
