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

#include "rydotoc/series_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "rydotoc/format.hpp"

namespace rydotoc {

namespace {

const char* const kSeriesColumns = "site,t,raw,norm,otoc,stderr";

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError("line " + std::to_string(line_no) + ": '" + s + "' is not a number");
    }
}

std::string meta_line(const std::string& schema, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string out = "# rydotoc " + schema + " v" + std::to_string(kSeriesSchemaVersion);
    for (const auto& [k, v] : kv) out += " " + k + "=" + v;
    return out + "\n";
}

}  // namespace

CsvHeader parse_csv_header(const std::string& line) {
    std::istringstream in(line);
    std::string hash, tool, version;
    CsvHeader h;
    in >> hash >> tool >> h.schema >> version;
    if (hash != "#" || tool != "rydotoc" || h.schema.empty() || version.size() < 2 || version[0] != 'v') {
        throw SchemaError("missing '# rydotoc <schema> v<N>' header line");
    }
    try {
        h.version = std::stoi(version.substr(1));
    } catch (const std::exception&) {
        throw SchemaError("malformed schema version '" + version + "'");
    }
    std::string kv;
    while (in >> kv) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) h.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return h;
}

std::string series_to_csv(const OtocSeries& s) {
    std::string out = meta_line("otoc_series", {{"source", s.source},
                                                {"observable", s.observable},
                                                {"config_hash", s.config_hash.empty() ? "-" : s.config_hash},
                                                {"seed", std::to_string(s.seed)},
                                                {"n_instances", std::to_string(s.n_instances)},
                                                {"n_shots", std::to_string(s.n_shots)},
                                                {"n_sites", std::to_string(s.n_sites)},
                                                {"n_times", std::to_string(s.times.size())}});
    out += kSeriesColumns;
    out += "\n";
    for (int i = 0; i < s.n_sites; ++i) {
        const auto si = static_cast<std::size_t>(i);
        for (std::size_t k = 0; k < s.times.size(); ++k) {
            out += std::to_string(i + 1) + "," + format_number(s.times[k]) + "," + format_exact(s.raw[si][k]) +
                   "," + format_exact(s.norm[si][k]) + "," + format_exact(s.otoc[si][k]) + "," +
                   format_exact(s.stderr_otoc[si][k]) + "\n";
        }
    }
    return out;
}

OtocSeries series_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty series file");
    const CsvHeader h = parse_csv_header(line);
    if (h.schema != "otoc_series") throw SchemaError("expected schema otoc_series, found " + h.schema);
    if (h.version != kSeriesSchemaVersion) {
        throw SchemaError("otoc_series schema v" + std::to_string(h.version) + " is not supported (expected v" +
                          std::to_string(kSeriesSchemaVersion) + ")");
    }
    if (!std::getline(in, line) || line != kSeriesColumns) {
        throw SchemaError(std::string("expected column line '") + kSeriesColumns + "'");
    }
    struct Row {
        int site;
        double t, raw, norm, otoc, err;
    };
    std::vector<Row> rows;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 6) throw SchemaError("line " + std::to_string(line_no) + ": expected 6 fields");
        const double site = parse_double(f[0], line_no);
        if (site < 1 || site != std::floor(site)) {
            throw SchemaError("line " + std::to_string(line_no) + ": site must be a positive integer");
        }
        rows.push_back({static_cast<int>(site) - 1, parse_double(f[1], line_no), parse_double(f[2], line_no),
                        parse_double(f[3], line_no), parse_double(f[4], line_no), parse_double(f[5], line_no)});
    }
    if (rows.empty()) throw SchemaError("series file has no rows");
    int n_sites = 0;
    std::vector<double> times;
    for (const auto& r : rows) {
        n_sites = std::max(n_sites, r.site + 1);
        if (r.site == rows.front().site) times.push_back(r.t);
    }
    if (rows.size() != static_cast<std::size_t>(n_sites) * times.size()) {
        throw SchemaError("series rows do not form a full site x time grid");
    }
    OtocSeries s = OtocSeries::zeros(n_sites, times);
    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(n_sites), std::vector<bool>(times.size(), false));
    for (const auto& r : rows) {
        const auto it = std::find_if(times.begin(), times.end(), [&](double t) { return std::abs(t - r.t) < 1e-12; });
        if (it == times.end()) throw SchemaError("site " + std::to_string(r.site + 1) + " has an off-grid time");
        const auto k = static_cast<std::size_t>(it - times.begin());
        const auto si = static_cast<std::size_t>(r.site);
        if (seen[si][k]) throw SchemaError("duplicate row for site " + std::to_string(r.site + 1));
        seen[si][k] = true;
        s.raw[si][k] = r.raw;
        s.norm[si][k] = r.norm;
        s.otoc[si][k] = r.otoc;
        s.stderr_otoc[si][k] = r.err;
    }
    auto meta = [&](const std::string& k, const std::string& dflt) {
        const auto it = h.meta.find(k);
        return it == h.meta.end() ? dflt : it->second;
    };
    s.source = meta("source", "unknown");
    s.observable = meta("observable", "centered");
    s.config_hash = meta("config_hash", "");
    if (s.config_hash == "-") s.config_hash.clear();
    try {
        s.seed = std::stoull(meta("seed", "0"));
        s.n_instances = std::stoull(meta("n_instances", "0"));
        s.n_shots = std::stoull(meta("n_shots", "0"));
        // declared grid, when present, must match the rows
        if (h.meta.count("n_sites") && std::stoi(h.meta.at("n_sites")) != n_sites) {
            throw SchemaError("header declares " + h.meta.at("n_sites") + " sites, rows hold " +
                              std::to_string(n_sites));
        }
        if (h.meta.count("n_times") && std::stoul(h.meta.at("n_times")) != times.size()) {
            throw SchemaError("header declares " + h.meta.at("n_times") + " times, rows hold " +
                              std::to_string(times.size()));
        }
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception&) {
        throw SchemaError("malformed numeric metadata in the header line");
    }
    return s;
}

std::string heatmap_to_csv(const Heatmap& hm) {
    hm.check();
    std::string out = meta_line("heatmap", {});
    out += "site,t,value,masked\n";
    for (std::size_t r = 0; r < hm.sites.size(); ++r) {
        const bool m = hm.masked(hm.sites[r]);
        for (std::size_t k = 0; k < hm.times.size(); ++k) {
            out += std::to_string(hm.sites[r] + 1) + "," + format_number(hm.times[k]) + "," +
                   format_number(hm.values[r][k]) + "," + (m ? "1" : "0") + "\n";
        }
    }
    return out;
}

std::string scatter_to_csv(const ScatterTable& table, const std::string& config_hash) {
    std::string out = meta_line("scatter", {{"t", format_number(table.time)},
                                            {"site", std::to_string(table.site + 1)},
                                            {"pearson", format_number(table.pearson)},
                                            {"config_hash", config_hash.empty() ? "-" : config_hash}});
    out += "instance,plain,butterflied\n";
    for (std::size_t r = 0; r < table.instance_ids.size(); ++r) {
        out += std::to_string(table.instance_ids[r]) + "," + format_number(table.plain[r]) + "," +
               format_number(table.butterflied[r]) + "\n";
    }
    return out;
}

std::string branches_to_jsonl(const std::vector<BranchResult>& branches, const QuenchEnsemble& ensemble,
                              std::span<const double> times) {
    std::string out;
    for (const auto& br : branches) {
        const auto& inst = ensemble.instances.at(br.instance_id);
        nlohmann::json j = {{"instance", br.instance_id},
                            {"branch", to_string(br.branch)},
                            {"fragment_hash", br.fragment_hash},
                            {"seed", inst.seed},
                            {"detuning_amplitudes", inst.amplitudes},
                            {"rabi_amplitudes", inst.rabi_amplitudes},
                            {"times", std::vector<double>(times.begin(), times.end())},
                            {"occupancy", br.occupancy}};
        if (!br.shots.empty()) j["shots"] = br.shots;
        out += j.dump() + "\n";
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace rydotoc
