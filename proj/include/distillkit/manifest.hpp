#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace distillkit {

// Written last into every run directory: command, resolved configuration,
// code version, timestamps, and a hashed inventory of all outputs.
struct RunManifest {
    std::string command;
    nlohmann::json resolved_config;
    std::string version;
    std::string started_at;
    std::string finished_at;
    std::vector<std::pair<std::string, std::string>> outputs;  // relative path, sha256
};

std::string sha256_file(const std::string& path);
std::string iso8601_now();

// Hashes every listed file (relative to out_dir) and writes manifest.json.
void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const nlohmann::json& resolved_config, const std::string& started_at,
                        const std::vector<std::string>& output_files);

}  // namespace distillkit
