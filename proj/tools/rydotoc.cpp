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

// rydotoc command-line entry point.
//
// Exit codes: 0 success, 2 invalid configuration or input schema,
// 3 runtime failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rydotoc/analysis.hpp"
#include "rydotoc/experiment_config.hpp"
#include "rydotoc/format.hpp"
#include "rydotoc/manifest.hpp"
#include "rydotoc/series_io.hpp"

#ifndef RYDOTOC_PRESET_DIR
#define RYDOTOC_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace rydotoc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr const char* kOutDirEnv = "RYDOTOC_OUT_DIR";

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_dir;
    std::string noise_preset;
    std::vector<int> mask_sites;  // 1-based, as typed
    std::optional<double> threshold;
    std::optional<double> cutoff_time;
    bool quiet = false;
};

// Input problems that should exit with code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path preset_dir() {
    if (const char* env = std::getenv("RYDOTOC_PRESET_DIR")) return env;
    return RYDOTOC_PRESET_DIR;
}

ExperimentConfig load_config(const CommonOptions& o) {
    if (o.config.empty()) throw ConfigError("no config given (use --config or a positional argument)");
    ExperimentConfig cfg = load_experiment_config(o.config, preset_dir());
    if (o.seed) cfg.experiment.seed = *o.seed;
    if (o.workers) cfg.experiment.workers = *o.workers;
    if (!o.noise_preset.empty()) cfg.set_noise_preset(o.noise_preset);
    const int n = cfg.experiment.geometry.n_atoms();
    if (!o.mask_sites.empty()) {
        cfg.analysis.mask_sites.clear();
        for (int s : o.mask_sites) {
            if (s < 1 || s > n) throw ConfigError("--mask-site " + std::to_string(s) + " outside the chain");
            cfg.analysis.mask_sites.push_back(s - 1);
        }
    }
    if (o.threshold) cfg.analysis.threshold = *o.threshold;
    if (o.cutoff_time) cfg.analysis.cutoff_time = *o.cutoff_time;
    cfg.validate();
    return cfg;
}

// Flag, then environment, then config, then out/<name>.
fs::path output_dir(const CommonOptions& o, const std::string& config_out, const std::string& name) {
    if (!o.out_dir.empty()) return o.out_dir;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    if (!config_out.empty()) return config_out;
    return fs::path("out") / name;
}

void add_common(CLI::App* app, CommonOptions& o, bool positional_config = true) {
    app->add_option("--config", o.config, "config file or preset name");
    if (positional_config) app->add_option("config_positional", o.config, "config file or preset name");
    app->add_option("--seed", o.seed, "master seed override");
    app->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--out-dir", o.out_dir, std::string("output directory (env ") + kOutDirEnv + ")");
    app->add_option("--noise-preset", o.noise_preset, "noise model")
        ->check(CLI::IsMember({"none", "appA_low", "appA_high"}));
    app->add_option("--mask-site", o.mask_sites, "1-based site excluded from fits (repeatable)");
    app->add_option("--threshold", o.threshold, "arrival threshold as a fraction of the drop");
    app->add_option("--cutoff-time", o.cutoff_time, "ignore samples after this time (us)");
    app->add_flag("--quiet", o.quiet, "no progress lines on stderr");
}

std::string scatter_name(double t) { return "scatter_t" + format_number(t) + ".csv"; }

// Runs `body`, recording status and timings in the manifest even on failure.
template <typename F>
int with_manifest(RunManifest& manifest, const fs::path& dir, F&& body) {
    StageTimer timer(manifest);
    manifest.started_utc = utc_timestamp();
    try {
        body(timer);
        manifest.status = "ok";
        manifest.wall_clock_s = timer.total_seconds();
        manifest.write(dir);
        return kExitOk;
    } catch (const std::exception& e) {
        manifest.status = "failed";
        manifest.error = e.what();
        manifest.wall_clock_s = timer.total_seconds();
        try {
            manifest.write(dir);
        } catch (const std::exception&) {
        }
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_run_otoc(const CommonOptions& o, bool write_branches) {
    ExperimentConfig cfg = load_config(o);
    const OtocExperiment& e = cfg.experiment;
    const fs::path dir = output_dir(o, cfg.out_dir, e.name);
    RunManifest manifest;
    manifest.command = "run-otoc";
    manifest.config_name = e.name;
    manifest.config_hash = cfg.hash();
    manifest.seeds["master"] = e.seed;
    manifest.progress_total = e.n_instances;
    manifest.extra = {{"noise_preset", cfg.noise_preset}, {"workers", e.workers}};
    return with_manifest(manifest, dir, [&](StageTimer& timer) {
        std::mutex mu;
        const ExperimentResult r = run_experiment(e, [&](std::size_t u, std::size_t done) {
            std::lock_guard<std::mutex> lock(mu);
            manifest.progress_completed = done;
            if (!o.quiet) {
                std::cerr << nlohmann::json{{"event", "instance_done"}, {"instance", u},
                                            {"completed", done}, {"total", e.n_instances}}
                                 .dump()
                          << "\n";
            }
        });
        timer.lap("simulate");
        OtocSeries series = r.series;
        series.config_hash = manifest.config_hash;
        write_text_file(dir / "otoc_series.csv", series_to_csv(series));
        manifest.add_output(dir, "otoc_series.csv");
        const Heatmap hm = Heatmap::from_series(series, cfg.analysis.mask_sites);
        write_text_file(dir / "heatmap.csv", heatmap_to_csv(hm));
        manifest.add_output(dir, "heatmap.csv");
        const int probe = e.butterfly.site > 0 ? e.butterfly.site - 1 : e.butterfly.site + 1;
        nlohmann::json pearson = nlohmann::json::object();
        for (double t : cfg.scatter_times) {
            std::size_t k = 0;
            while (std::abs(e.times[k] - t) > 1e-9) ++k;
            const ScatterTable table = scatter_export(r.branches, e.times, k, probe);
            const std::string name = scatter_name(t);
            write_text_file(dir / name, scatter_to_csv(table, manifest.config_hash));
            manifest.add_output(dir, name);
            pearson[format_number(t)] = table.pearson;
        }
        if (write_branches) {
            write_text_file(dir / "branches.jsonl", branches_to_jsonl(r.branches, r.ensemble, e.times));
            manifest.add_output(dir, "branches.jsonl");
        }
        timer.lap("write");
        manifest.extra["clip_fraction"] = r.ensemble.clip_fraction();
        manifest.extra["scatter_site"] = probe + 1;
        manifest.extra["scatter_pearson"] = pearson;
        if (!o.quiet) std::cerr << "wrote " << (dir / "otoc_series.csv").string() << "\n";
    });
}

int cmd_m2_scan(const CommonOptions& o) {
    ExperimentConfig cfg = load_config(o);
    const OtocExperiment& e = cfg.experiment;
    const fs::path dir = output_dir(o, cfg.out_dir, e.name + "_m2");
    RunManifest manifest;
    manifest.command = "m2-scan";
    manifest.config_name = e.name;
    manifest.config_hash = cfg.hash();
    manifest.seeds["master"] = e.seed;
    manifest.progress_total = cfg.scan.n_quench_values.size();
    return with_manifest(manifest, dir, [&](StageTimer& timer) {
        ScanRequest req;
        req.config_template = e.quench;
        req.n_quench_values = cfg.scan.n_quench_values;
        req.n_instances = cfg.scan.n_instances;
        req.geometry = e.geometry;
        req.profile = e.profile;
        req.propagator = e.propagator;
        req.master_seed = e.seed;
        req.workers = e.workers;
        const auto rows = convergence_scan(req);
        manifest.progress_completed = rows.size();
        timer.lap("scan");
        std::string csv = scan_to_csv(rows);
        write_text_file(dir / "m2_scan.csv", csv);
        manifest.add_output(dir, "m2_scan.csv");
        timer.lap("write");
    });
}

int cmd_oracle(const CommonOptions& o, const std::string& convention) {
    ExperimentConfig cfg = load_config(o);
    if (!convention.empty()) {
        cfg.convention = convention == "backward" ? HeisenbergConvention::backward : HeisenbergConvention::forward;
    }
    const OtocExperiment& e = cfg.experiment;
    OracleOptions opts;
    opts.observable = e.observable;
    opts.convention = cfg.convention;
    opts.propagator = e.propagator;
    if (e.geometry.n_atoms() > opts.max_atoms) {
        throw ConfigError("dimension guard: the oracle supports at most " + std::to_string(opts.max_atoms) +
                          " atoms, config has " + std::to_string(e.geometry.n_atoms()));
    }
    const fs::path dir = output_dir(o, cfg.out_dir, e.name);
    RunManifest manifest;
    manifest.command = "oracle";
    manifest.config_name = e.name;
    manifest.config_hash = cfg.hash();
    manifest.progress_total = 1;
    manifest.extra = {{"convention", cfg.convention == HeisenbergConvention::forward ? "forward" : "backward"}};
    return with_manifest(manifest, dir, [&](StageTimer& timer) {
        OtocSeries s = exact_otoc_series(e.geometry, e.drive, e.profile, e.butterfly, e.times, opts);
        s.config_hash = manifest.config_hash;
        manifest.progress_completed = 1;
        timer.lap("oracle");
        write_text_file(dir / "oracle_series.csv", series_to_csv(s));
        manifest.add_output(dir, "oracle_series.csv");
        timer.lap("write");
    });
}

OtocSeries load_series(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    return series_from_csv(text);
}

int cmd_analyze(const CommonOptions& o, const std::string& fit_path, const std::vector<std::string>& compare,
                std::optional<int> reference_site, double max_time, const std::string& orientation) {
    if (fit_path.empty() && compare.empty()) throw UsageError("analyze needs --fit and/or --compare");
    AnalysisSettings settings;
    std::string out_hint = "analysis";
    if (!o.config.empty()) {
        const ExperimentConfig cfg = load_config(o);
        settings = cfg.analysis;
        settings.reference_site = cfg.reference_site();
        out_hint = cfg.experiment.name;
    } else {
        for (int s : o.mask_sites) settings.mask_sites.push_back(s - 1);
        if (o.threshold) settings.threshold = *o.threshold;
        if (o.cutoff_time) settings.cutoff_time = *o.cutoff_time;
    }
    if (!orientation.empty()) settings.orientation = parse_fit_orientation(orientation);
    const fs::path dir = output_dir(o, "", out_hint);

    std::optional<OtocSeries> fit_series;
    std::optional<std::pair<OtocSeries, OtocSeries>> pair;
    if (!fit_path.empty()) fit_series = load_series(fit_path);
    if (!compare.empty()) {
        if (compare.size() != 2) throw UsageError("--compare takes exactly two series files");
        pair.emplace(load_series(compare[0]), load_series(compare[1]));
    }
    const int n_sites = fit_series ? fit_series->n_sites : pair->first.n_sites;
    int ref = reference_site ? *reference_site - 1 : settings.reference_site;
    if (ref < 0) ref = n_sites - 1;
    if (ref >= n_sites) throw UsageError("reference site outside the chain");
    for (int s : settings.mask_sites) {
        if (s < 0 || s >= n_sites) throw UsageError("mask site outside the chain");
    }

    RunManifest manifest;
    manifest.command = "analyze";
    manifest.config_name = out_hint;
    manifest.config_hash = fit_series ? fit_series->config_hash : pair->first.config_hash;
    return with_manifest(manifest, dir, [&](StageTimer& timer) {
        if (fit_series) {
            const LightconeFit lc = extract_lightcone(*fit_series, settings.mask_sites, ref, settings.threshold,
                                                      settings.cutoff_time, settings.orientation);
            nlohmann::json j = lc.to_json();
            j["input"] = fit_path;
            j["config_hash"] = fit_series->config_hash;
            write_text_file(dir / "lightcone_fit.json", j.dump(2) + "\n");
            manifest.add_output(dir, "lightcone_fit.json");
            write_text_file(dir / "heatmap.csv", heatmap_to_csv(Heatmap::from_series(*fit_series, settings.mask_sites)));
            manifest.add_output(dir, "heatmap.csv");
            std::cout << "slope " << format_number(lc.us_per_site) << " +- " << format_number(lc.us_per_site_se)
                      << " us/site (" << format_number(lc.sites_per_us) << " +- "
                      << format_number(lc.sites_per_us_se) << " sites/us)\n";
            timer.lap("fit");
        }
        if (pair) {
            CompareOptions copts;
            copts.mask = settings.mask_sites;
            copts.reference_site = ref;
            copts.threshold = settings.threshold;
            copts.cutoff_time = settings.cutoff_time;
            copts.max_time = max_time;
            const CompareReport rep = compare_series(pair->first, pair->second, copts);
            nlohmann::json j = rep.to_json();
            j["inputs"] = compare;
            write_text_file(dir / "compare_report.json", j.dump(2) + "\n");
            manifest.add_output(dir, "compare_report.json");
            std::cout << rep.summary();
            timer.lap("compare");
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rydotoc: randomized-measurement OTOC simulator for Rydberg chains"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CommonOptions run_o, scan_o, oracle_o, analyze_o;
    bool branches = false;
    std::string convention;
    std::string fit_path, orientation;
    std::vector<std::string> compare;
    std::optional<int> reference_site;
    double max_time = -1.0;

    CLI::App* run = app.add_subcommand("run-otoc", "run the randomized OTOC protocol");
    add_common(run, run_o);
    run->add_flag("--branches", branches, "also write branches.jsonl");

    CLI::App* scan = app.add_subcommand("m2-scan", "second-moment convergence scan over n_quench");
    add_common(scan, scan_o);

    CLI::App* oracle = app.add_subcommand("oracle", "exact infinite-temperature OTOC");
    add_common(oracle, oracle_o);
    oracle->add_option("--convention", convention, "Heisenberg convention")
        ->check(CLI::IsMember({"forward", "backward"}));

    CLI::App* analyze = app.add_subcommand("analyze", "lightcone fit and series comparison");
    add_common(analyze, analyze_o, false);
    analyze->add_option("--fit", fit_path, "otoc_series.csv to fit");
    analyze->add_option("--compare", compare, "two series files to compare")->expected(2);
    analyze->add_option("--reference-site", reference_site, "1-based site distances are measured from");
    analyze->add_option("--max-time", max_time, "compare only times up to this value (us)");
    analyze->add_option("--orientation", orientation, "time_vs_distance or distance_vs_time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run_otoc(run_o, branches);
        if (*scan) return cmd_m2_scan(scan_o);
        if (*oracle) return cmd_oracle(oracle_o, convention);
        if (*analyze) return cmd_analyze(analyze_o, fit_path, compare, reference_site, max_time, orientation);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
