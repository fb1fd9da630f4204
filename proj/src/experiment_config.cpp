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

#include "rydotoc/experiment_config.hpp"

#include <cmath>
#include <set>

#include "rydotoc/manifest.hpp"
#include "rydotoc/pulse_json.hpp"
#include "rydotoc/series_io.hpp"

namespace rydotoc {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

double mhz_or(const json& j, const char* key, double fallback_rad) {
    return j.contains(key) ? from_mhz(j.at(key).get<double>()) : fallback_rad;
}

int site_from_json(const json& j, int n_atoms, const std::string& what) {
    const int s = j.get<int>();
    if (s < 1 || s > n_atoms) {
        throw ConfigError(what + " " + std::to_string(s) + " outside 1.." + std::to_string(n_atoms));
    }
    return s - 1;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

QuenchConfig parse_quench(const json& j) {
    require_object(j, "quench",
                   {"n_quench", "t_quench_us", "spacing_us", "ramp_us", "micro_ramp_us", "budget_us",
                    "mu_2pi_MHz", "sigma_2pi_MHz", "channel", "omega_q_2pi_MHz", "rabi_mu_2pi_MHz",
                    "rabi_sigma_2pi_MHz", "local_mode", "local_mu_2pi_MHz", "local_sigma_2pi_MHz"});
    QuenchConfig q;
    q.n_quench = get_or(j, "n_quench", q.n_quench);
    q.t_quench = get_or(j, "t_quench_us", q.t_quench);
    q.quench_spacing = get_or(j, "spacing_us", q.quench_spacing);
    q.ramp_time = get_or(j, "ramp_us", q.ramp_time);
    q.micro_ramp = get_or(j, "micro_ramp_us", q.micro_ramp);
    q.stage_budget = get_or(j, "budget_us", q.stage_budget);
    q.gaussian_mean = mhz_or(j, "mu_2pi_MHz", q.gaussian_mean);
    q.gaussian_sigma = mhz_or(j, "sigma_2pi_MHz", q.gaussian_sigma);
    if (j.contains("channel")) q.channel = parse_quench_channel(j.at("channel").get<std::string>());
    q.omega_q = mhz_or(j, "omega_q_2pi_MHz", q.omega_q);
    q.rabi_mean = mhz_or(j, "rabi_mu_2pi_MHz", q.rabi_mean);
    q.rabi_sigma = mhz_or(j, "rabi_sigma_2pi_MHz", q.rabi_sigma);
    if (j.contains("local_mode")) q.local_mode = parse_local_quench_mode(j.at("local_mode").get<std::string>());
    q.local_mean = mhz_or(j, "local_mu_2pi_MHz", q.local_mean);
    q.local_sigma = mhz_or(j, "local_sigma_2pi_MHz", q.local_sigma);
    return q;
}

json quench_json(const QuenchConfig& q) {
    return {{"n_quench", q.n_quench},          {"t_quench_us", q.t_quench},   {"spacing_us", q.quench_spacing},
            {"ramp_us", q.ramp_time},          {"micro_ramp_us", q.micro_ramp}, {"budget_us", q.stage_budget},
            {"mu", q.gaussian_mean},           {"sigma", q.gaussian_sigma},   {"channel", to_string(q.channel)},
            {"omega_q", q.omega_q},            {"rabi_mu", q.rabi_mean},      {"rabi_sigma", q.rabi_sigma},
            {"local_mode", to_string(q.local_mode)}, {"local_mu", q.local_mean}, {"local_sigma", q.local_sigma}};
}

json noise_json(const NoiseModel& n) {
    return {{"gamma_depol", n.gamma_depol},
            {"gamma_rg", n.gamma_rg},
            {"delta_detuning_sigma", n.delta_detuning_sigma},
            {"relative_rabi_sigma", n.relative_rabi_sigma},
            {"position_sigma", n.position_sigma},
            {"local_site_noise_multiplier", n.local_site_noise_multiplier},
            {"n_trajectories", n.n_trajectories},
            {"depolarizing_form", n.depolarizing_form == DepolarizingForm::combined ? "combined" : "three_channel"}};
}

}  // namespace

std::vector<double> uniform_grid(double start, double stop, double step) {
    if (!(step > 0.0)) throw ConfigError("time grid step must be positive");
    if (stop < start) throw ConfigError("time grid stop precedes start");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k) {
        // round away accumulated binary noise so grids print cleanly
        out.push_back(std::round((start + static_cast<double>(k) * step) * 1e12) / 1e12);
    }
    return out;
}

int ExperimentConfig::reference_site() const {
    return analysis.reference_site >= 0 ? analysis.reference_site : experiment.butterfly.site;
}

void ExperimentConfig::set_noise_preset(const std::string& name) {
    NoiseModel model;
    try {
        model = NoiseModel::preset(name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    noise_preset = name;
    if (noise_trajectories) model.n_trajectories = *noise_trajectories;
    if (model.is_noiseless()) {
        experiment.noise.reset();
    } else {
        experiment.noise = model;
    }
}

void ExperimentConfig::validate() const {
    try {
        experiment.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    const int n = experiment.geometry.n_atoms();
    for (int s : analysis.mask_sites) {
        if (s < 0 || s >= n) throw ConfigError("mask site outside the chain");
    }
    if (reference_site() < 0 || reference_site() >= n) throw ConfigError("reference site outside the chain");
    if (!(analysis.threshold > 0.0 && analysis.threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    if (!(analysis.cutoff_time > 0.0)) throw ConfigError("cutoff time must be positive");
    for (double t : scatter_times) {
        bool on_grid = false;
        for (double g : experiment.times) on_grid = on_grid || std::abs(g - t) < 1e-9;
        if (!on_grid) throw ConfigError("scatter time " + std::to_string(t) + " is not on the time grid");
    }
    if (scan.n_quench_values.empty()) throw ConfigError("scan needs at least one n_quench value");
    for (int v : scan.n_quench_values) {
        if (v < 1) throw ConfigError("scan n_quench values must be positive");
    }
    if (scan.n_instances < 2) throw ConfigError("scan needs at least two instances");
}

json ExperimentConfig::canonical() const {
    const OtocExperiment& e = experiment;
    json j = {{"name", e.name},
              {"geometry", e.geometry},
              {"hardware", e.profile},
              {"drive", e.drive},
              {"quench", quench_json(e.quench)},
              {"butterfly",
               {{"kind", e.butterfly.kind == ButterflyKind::phase ? "phase" : "projector"},
                {"site", e.butterfly.site},
                {"phi", e.butterfly.phi},
                {"pulse_amplitude", e.butterfly.pulse_amplitude}}},
              {"observable", to_string(e.observable)},
              {"times", e.times},
              {"n_instances", e.n_instances},
              {"n_shots", e.n_shots},
              {"seed", e.seed},
              {"noise_preset", noise_preset},
              {"noise", e.noise ? noise_json(*e.noise) : json(nullptr)},
              {"propagator",
               {{"dt_us", e.propagator.dt},
                {"method", e.propagator.method == PropagationMethod::exact_exponential ? "exact" : "rk4"},
                {"tolerance", e.propagator.tolerance}}},
              {"convention", convention == HeisenbergConvention::forward ? "forward" : "backward"},
              {"analysis",
               {{"mask_sites", analysis.mask_sites},
                {"reference_site", reference_site()},
                {"threshold", analysis.threshold},
                {"cutoff_time_us", analysis.cutoff_time},
                {"orientation", to_string(analysis.orientation)}}},
              {"scan", {{"n_quench_values", scan.n_quench_values}, {"n_instances", scan.n_instances}}},
              {"scatter_times_us", scatter_times},
              {"keep_shots", e.keep_shots}};
    return j;
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical().dump()).substr(0, 16); }

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw ConfigError(origin + ": malformed JSON at line " + std::to_string(line) + ", column " +
                          std::to_string(col));
    }
    ExperimentConfig cfg;
    OtocExperiment& e = cfg.experiment;
    try {
        require_object(doc, origin,
                       {"name", "description", "geometry", "hardware", "drive", "quench", "butterfly",
                        "observable", "times", "n_instances", "n_shots", "seed", "workers", "noise_preset",
                        "noise_trajectories", "propagator", "convention", "analysis", "scan",
                        "scatter_times_us", "keep_shots", "out_dir"});
        e.name = get_or<std::string>(doc, "name", "experiment");
        if (!doc.contains("geometry")) throw ConfigError("missing 'geometry'");
        e.geometry = doc.at("geometry").get<AtomGeometry>();
        const int n = e.geometry.n_atoms();
        if (n < 1) throw ConfigError("geometry has no atoms");
        if (n > kMaxAtoms) {
            throw ConfigError("dimension guard: " + std::to_string(n) + " atoms exceeds the limit of " +
                              std::to_string(kMaxAtoms));
        }
        if (doc.contains("hardware")) e.profile = doc.at("hardware").get<HardwareProfile>();

        if (!doc.contains("drive")) throw ConfigError("missing 'drive'");
        const json& d = doc.at("drive");
        if (d.contains("schedule")) {
            require_object(d, "drive", {"schedule"});
            e.drive = d.at("schedule").get<PulseSchedule>();
        } else {
            require_object(d, "drive", {"omega_2pi_MHz", "delta_2pi_MHz", "duration_us"});
            e.drive = PulseSchedule::constant(from_mhz(d.at("omega_2pi_MHz").get<double>()),
                                              from_mhz(d.at("delta_2pi_MHz").get<double>()),
                                              get_or(d, "duration_us", e.profile.max_duration));
        }
        if (doc.contains("quench")) e.quench = parse_quench(doc.at("quench"));

        e.butterfly.site = n - 1;
        if (doc.contains("butterfly")) {
            const json& b = doc.at("butterfly");
            require_object(b, "butterfly", {"site", "kind", "phi_rad", "amplitude_2pi_MHz"});
            if (b.contains("site")) e.butterfly.site = site_from_json(b.at("site"), n, "butterfly site");
            const std::string kind = get_or<std::string>(b, "kind", "phase");
            if (kind == "phase") {
                e.butterfly.kind = ButterflyKind::phase;
            } else if (kind == "projector") {
                e.butterfly.kind = ButterflyKind::projector;
            } else {
                throw ConfigError("unknown butterfly kind '" + kind + "'");
            }
            e.butterfly.phi = get_or(b, "phi_rad", e.butterfly.phi);
            e.butterfly.pulse_amplitude = mhz_or(b, "amplitude_2pi_MHz", e.butterfly.pulse_amplitude);
        }
        if (doc.contains("observable")) e.observable = parse_observable_form(doc.at("observable").get<std::string>());

        if (!doc.contains("times")) throw ConfigError("missing 'times'");
        const json& t = doc.at("times");
        if (t.is_array()) {
            e.times = t.get<std::vector<double>>();
        } else {
            require_object(t, "times", {"start_us", "stop_us", "step_us"});
            e.times = uniform_grid(get_or(t, "start_us", 0.0), t.at("stop_us").get<double>(),
                                   t.at("step_us").get<double>());
        }
        e.n_instances = get_or<std::size_t>(doc, "n_instances", e.n_instances);
        e.n_shots = get_or<std::size_t>(doc, "n_shots", e.n_shots);
        e.seed = get_or<std::uint64_t>(doc, "seed", e.seed);
        e.workers = get_or(doc, "workers", e.workers);
        e.keep_shots = get_or(doc, "keep_shots", e.keep_shots);
        if (doc.contains("propagator")) {
            const json& p = doc.at("propagator");
            require_object(p, "propagator", {"dt_us", "method", "tolerance"});
            e.propagator.dt = get_or(p, "dt_us", e.propagator.dt);
            e.propagator.tolerance = get_or(p, "tolerance", e.propagator.tolerance);
            const std::string m = get_or<std::string>(p, "method", "exact");
            if (m == "exact") {
                e.propagator.method = PropagationMethod::exact_exponential;
            } else if (m == "rk4") {
                e.propagator.method = PropagationMethod::runge_kutta4;
            } else {
                throw ConfigError("unknown propagation method '" + m + "'");
            }
        }
        if (doc.contains("noise_trajectories")) {
            const int nt = doc.at("noise_trajectories").get<int>();
            if (nt < 1) throw ConfigError("noise_trajectories must be at least 1");
            cfg.noise_trajectories = nt;
        }
        cfg.set_noise_preset(get_or<std::string>(doc, "noise_preset", "none"));
        if (doc.contains("convention")) {
            const std::string c = doc.at("convention").get<std::string>();
            if (c == "forward") {
                cfg.convention = HeisenbergConvention::forward;
            } else if (c == "backward") {
                cfg.convention = HeisenbergConvention::backward;
            } else {
                throw ConfigError("unknown convention '" + c + "'");
            }
        }
        if (doc.contains("analysis")) {
            const json& a = doc.at("analysis");
            require_object(a, "analysis", {"mask_sites", "reference_site", "threshold", "cutoff_time_us", "orientation"});
            if (a.contains("mask_sites")) {
                for (const auto& s : a.at("mask_sites")) {
                    cfg.analysis.mask_sites.push_back(site_from_json(s, n, "mask site"));
                }
            }
            if (a.contains("reference_site")) {
                cfg.analysis.reference_site = site_from_json(a.at("reference_site"), n, "reference site");
            }
            cfg.analysis.threshold = get_or(a, "threshold", cfg.analysis.threshold);
            cfg.analysis.cutoff_time = get_or(a, "cutoff_time_us", cfg.analysis.cutoff_time);
            if (a.contains("orientation")) {
                cfg.analysis.orientation = parse_fit_orientation(a.at("orientation").get<std::string>());
            }
        }
        if (doc.contains("scan")) {
            const json& s = doc.at("scan");
            require_object(s, "scan", {"n_quench_values", "n_instances"});
            cfg.scan.n_quench_values = get_or(s, "n_quench_values", cfg.scan.n_quench_values);
            cfg.scan.n_instances = get_or(s, "n_instances", cfg.scan.n_instances);
        }
        cfg.scatter_times = get_or(doc, "scatter_times_us", cfg.scatter_times);
        cfg.out_dir = get_or<std::string>(doc, "out_dir", "");
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& ex) {
        throw ConfigError(origin + ": " + ex.what());
    } catch (const std::exception& ex) {
        throw ConfigError(origin + ": " + ex.what());
    }
    cfg.validate();
    return cfg;
}

std::filesystem::path resolve_config_path(const std::string& name_or_path,
                                          const std::filesystem::path& preset_dir) {
    const std::filesystem::path direct(name_or_path);
    if (std::filesystem::exists(direct)) return direct;
    const std::filesystem::path preset = preset_dir / (name_or_path + ".json");
    if (std::filesystem::exists(preset)) return preset;
    throw ConfigError("no config file or preset named '" + name_or_path + "'");
}

ExperimentConfig load_experiment_config(const std::string& name_or_path,
                                        const std::filesystem::path& preset_dir) {
    const auto path = resolve_config_path(name_or_path, preset_dir);
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_experiment_config(text, path.string());
}

}  // namespace rydotoc
