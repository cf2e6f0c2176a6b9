#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace sdnse {

const char* tool_version();

std::string sha256_hex(const std::string& bytes);
/// Throws std::runtime_error when the file cannot be read.
std::string sha256_file(const std::string& path);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Record of one CLI invocation: what ran, on which inputs, producing which outputs.
struct RunManifest {
    std::string subcommand;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string version = tool_version();
    std::string started;
    std::string finished;
    int threads = 1;
    int exit_code = 0;
    std::vector<std::string> argv;
    std::map<std::string, std::string> inputs;   // path -> sha256
    std::map<std::string, std::string> outputs;  // path -> sha256

    void add_input(const std::string& path) { inputs[path] = sha256_file(path); }
    /// Hashes a file, or every regular file below a directory.
    void add_output(const std::string& path);

    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

}  // namespace sdnse
