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

#include "rydotoc/manifest.hpp"

#include <ctime>
#include <stdexcept>

#include <openssl/evp.h>

#include "rydotoc/series_io.hpp"

namespace rydotoc {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

void RunManifest::add_output(const std::filesystem::path& dir, const std::string& relative) {
    const std::string content = read_text_file(dir / relative);
    outputs.push_back({relative, sha256_hex(content), content.size()});
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json stages_j = nlohmann::json::array();
    for (const auto& s : stages) stages_j.push_back({{"name", s.name}, {"seconds", s.seconds}});
    nlohmann::json outputs_j = nlohmann::json::array();
    for (const auto& o : outputs) outputs_j.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
    nlohmann::json j = {{"schema", "rydotoc manifest v1"},
                        {"tool", "rydotoc"},
                        {"version", kToolVersion},
                        {"command", command},
                        {"config_name", config_name},
                        {"config_hash", config_hash},
                        {"seeds", seeds},
                        {"started_utc", started_utc},
                        {"wall_clock_s", wall_clock_s},
                        {"stages", stages_j},
                        {"outputs", outputs_j},
                        {"status", status},
                        {"progress", {{"completed", progress_completed}, {"total", progress_total}}}};
    if (!error.empty()) j["error"] = error;
    if (!extra.empty()) j["extra"] = extra;
    return j;
}

void RunManifest::write(const std::filesystem::path& dir) const {
    write_text_file(dir / "manifest.json", to_json().dump(2) + "\n");
}

StageTimer::StageTimer(RunManifest& manifest)
    : manifest_(manifest), start_(std::chrono::steady_clock::now()), last_(start_) {}

void StageTimer::lap(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    manifest_.stages.push_back({name, std::chrono::duration<double>(now - last_).count()});
    manifest_.wall_clock_s = std::chrono::duration<double>(now - start_).count();
    last_ = now;
}

double StageTimer::total_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace rydotoc
