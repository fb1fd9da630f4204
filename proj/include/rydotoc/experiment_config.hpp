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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rydotoc/analysis.hpp"
#include "rydotoc/design.hpp"
#include "rydotoc/otoc.hpp"

// Experiment configuration documents. Frequencies are written as f/2pi in
// MHz (keys ending in _2pi_MHz), times in us, lengths in um, and sites are
// 1-based. Everything is converted to internal units on load.
//
// {
//   "name": "fiducial",
//   "geometry": {"chain": {"n_atoms": 8, "spacing_um": 9.5}},
//   "hardware": {...},                                  optional, see pulse_json.hpp
//   "drive": {"omega_2pi_MHz": 2.5, "delta_2pi_MHz": 1.5, "duration_us": 4.0},
//   "quench": {"n_quench": 4, "t_quench_us": 0.1, "mu_2pi_MHz": 1.0, ...},
//   "butterfly": {"site": 8, "phi_rad": 3.14159..., "amplitude_2pi_MHz": 5.0},
//   "times": {"start_us": 0.0, "stop_us": 4.0, "step_us": 0.1},
//   "n_instances": 200, "n_shots": 0, "seed": 1234,
//   "noise_preset": "none",
//   "analysis": {"mask_sites": [8], "threshold": 0.5, "cutoff_time_us": 4.0},
//   "scatter_times_us": [0.0, 0.9],
//   "scan": {"n_quench_values": [1, 2, 3, 4, 5], "n_instances": 200}
// }

namespace rydotoc {

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct AnalysisSettings {
    std::vector<int> mask_sites;  // 0-based
    int reference_site = -1;      // -1: the butterfly site
    double threshold = 0.5;
    double cutoff_time = 4.0;
    FitOrientation orientation = FitOrientation::time_vs_distance;
};

struct ScanSettings {
    std::vector<int> n_quench_values{1, 2, 3, 4, 5};
    std::size_t n_instances = 200;
};

struct ExperimentConfig {
    OtocExperiment experiment;
    std::string noise_preset = "none";
    std::optional<int> noise_trajectories;
    HeisenbergConvention convention = HeisenbergConvention::forward;
    AnalysisSettings analysis;
    ScanSettings scan;
    std::vector<double> scatter_times;
    std::string out_dir;

    /// Fully resolved document in internal units; omits workers and out_dir,
    /// which do not affect results.
    nlohmann::json canonical() const;
    /// First 16 hex digits of the SHA-256 of canonical().dump().
    std::string hash() const;
    /// Re-runs every check; throws ConfigError.
    void validate() const;
    /// Applies a noise preset name, keeping any trajectory override.
    void set_noise_preset(const std::string& name);
    int reference_site() const;
};

/// Parses and validates a configuration document. Malformed JSON raises a
/// ConfigError whose message carries "line L, column C".
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin = "<config>");

/// Loads `name_or_path` as a file, or as <preset_dir>/<name>.json when no such file exists.
ExperimentConfig load_experiment_config(const std::string& name_or_path,
                                        const std::filesystem::path& preset_dir);

std::filesystem::path resolve_config_path(const std::string& name_or_path,
                                          const std::filesystem::path& preset_dir);

/// Evenly spaced grid start, start + step, ... up to stop (inclusive within 1e-9).
std::vector<double> uniform_grid(double start, double stop, double step);

}  // namespace rydotoc
