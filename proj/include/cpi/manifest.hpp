#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpi/errors.hpp"
#include "cpi/io.hpp"
#include "cpi/scenario.hpp"
#include "cpi/version.hpp"

namespace cpi {

/// Provenance record written next to every command's outputs. Re-running a
/// command with the same inputs (and seed) must reproduce files with the
/// same checksums; `verify` re-checks them.
struct RunManifest {
    std::string command;
    std::vector<std::string> args;
    std::uint64_t scenario_hash = 0;
    std::string scenario_text;
    std::uint64_t seed = 0;
    std::string code_version = cpi::version;
    std::string timestamp;

    struct Output {
        std::string path;  // relative to the manifest's directory
        std::uint64_t bytes = 0;
        std::uint64_t fnv64 = 0;
    };
    std::vector<Output> outputs;

    void add_output(const std::string& dir, const std::string& name) {
        const std::string full = dir.empty() ? name : dir + "/" + name;
        Output o;
        o.path = name;
        o.bytes = std::filesystem::file_size(full);
        o.fnv64 = file_checksum(full);
        outputs.push_back(o);
    }

    void stamp() {
        const auto now = std::chrono::system_clock::now();
        const auto t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        timestamp = buf;
    }
};

inline void save_manifest(const RunManifest& m, const std::string& path) {
    nlohmann::json j;
    j["command"] = m.command;
    j["args"] = m.args;
    j["scenario_hash"] = m.scenario_hash;
    j["scenario"] = m.scenario_text;
    j["seed"] = m.seed;
    j["code_version"] = m.code_version;
    j["timestamp"] = m.timestamp;
    j["outputs"] = nlohmann::json::array();
    for (const auto& o : m.outputs) {
        j["outputs"].push_back({{"path", o.path}, {"bytes", o.bytes}, {"fnv64", o.fnv64}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed while writing manifest: " + path);
}

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("manifest parse error in " + path + ": " + e.what());
    }
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.args = j.at("args").get<std::vector<std::string>>();
        m.scenario_hash = j.at("scenario_hash").get<std::uint64_t>();
        m.scenario_text = j.at("scenario").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.code_version = j.at("code_version").get<std::string>();
        m.timestamp = j.at("timestamp").get<std::string>();
        for (const auto& o : j.at("outputs")) {
            m.outputs.push_back({o.at("path").get<std::string>(),
                                 o.at("bytes").get<std::uint64_t>(),
                                 o.at("fnv64").get<std::uint64_t>()});
        }
    } catch (const std::exception& e) {
        throw IoError("manifest field error in " + path + ": " + e.what());
    }
    return m;
}

/// Re-checks every output listed in the manifest against the files on disk.
/// Returns the list of mismatch descriptions; empty means verified.
inline std::vector<std::string> verify_manifest(const RunManifest& m, const std::string& dir) {
    std::vector<std::string> problems;
    for (const auto& o : m.outputs) {
        const std::string full = dir.empty() ? o.path : dir + "/" + o.path;
        if (!std::filesystem::exists(full)) {
            problems.push_back(o.path + ": missing");
            continue;
        }
        const auto bytes = std::filesystem::file_size(full);
        if (bytes != o.bytes) {
            problems.push_back(o.path + ": size mismatch");
            continue;
        }
        if (file_checksum(full) != o.fnv64) {
            problems.push_back(o.path + ": checksum mismatch");
        }
    }
    return problems;
}

}  // namespace cpi
