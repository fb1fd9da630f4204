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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rydotoc/analysis.hpp"
#include "rydotoc/design.hpp"
#include "rydotoc/otoc.hpp"

// CSV and JSON-lines serialization. Every CSV starts with a comment line
// "# rydotoc <schema> v<version>" followed by key=value metadata.

namespace rydotoc {

inline constexpr int kSeriesSchemaVersion = 1;

class SchemaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Parsed "# rydotoc <schema> v<N> key=value ..." line.
struct CsvHeader {
    std::string schema;
    int version = 0;
    std::map<std::string, std::string> meta;
};

CsvHeader parse_csv_header(const std::string& line);

std::string series_to_csv(const OtocSeries& series);
/// Throws SchemaError on a missing or mismatched header or malformed rows.
OtocSeries series_from_csv(const std::string& text);

std::string heatmap_to_csv(const Heatmap& hm);
std::string scatter_to_csv(const ScatterTable& table, const std::string& config_hash);

/// One JSON object per instance and branch.
std::string branches_to_jsonl(const std::vector<BranchResult>& branches, const QuenchEnsemble& ensemble,
                              std::span<const double> times);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace rydotoc
