// Copyright 2026 The rydotoc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rydotoc {

inline constexpr const char* kToolVersion = "0.1.0";

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

struct StageTiming {
    std::string name;
    double seconds = 0.0;
};

struct OutputRecord {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

/// Reproducibility record written next to every run's outputs.
struct RunManifest {
    std::string command;
    std::string config_name;
    std::string config_hash;
    std::map<std::string, std::uint64_t> seeds;
    std::string started_utc;
    double wall_clock_s = 0.0;
    std::vector<StageTiming> stages;
    std::vector<OutputRecord> outputs;
    std::string status = "running";
    std::string error;
    std::size_t progress_completed = 0;
    std::size_t progress_total = 0;
    nlohmann::json extra = nlohmann::json::object();

    /// Checksums a file that already exists under `dir`.
    void add_output(const std::filesystem::path& dir, const std::string& relative);
    nlohmann::json to_json() const;
    /// Writes manifest.json into `dir`.
    void write(const std::filesystem::path& dir) const;
};

/// Wall-clock stopwatch that appends named stages to a manifest.
class StageTimer {
  public:
    explicit StageTimer(RunManifest& manifest);
    void lap(const std::string& name);
    double total_seconds() const;

  private:
    RunManifest& manifest_;
    std::chrono::steady_clock::time_point start_;
    std::chrono::steady_clock::time_point last_;
};

std::string utc_timestamp();

}  // namespace rydotoc
