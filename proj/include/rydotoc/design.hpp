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
#include <string>
#include <vector>

#include "rydotoc/evolution.hpp"
#include "rydotoc/pulse.hpp"
#include "rydotoc/quantum.hpp"

namespace rydotoc {

enum class QuenchChannel { detuning, rabi, both };

/// Optional use of the local detuning channel during the quench. Global
/// quenches on a uniform chain started from |0...0> never leave the
/// reflection-symmetric sector; a random local pattern breaks that symmetry.
enum class LocalQuenchMode {
    none,
    random_mask,  // per instance: every site joins the mask with probability 1/2
};

LocalQuenchMode parse_local_quench_mode(const std::string& name);
std::string to_string(LocalQuenchMode mode);

QuenchChannel parse_quench_channel(const std::string& name);
std::string to_string(QuenchChannel channel);

/// Randomized global quench stage. Durations in us, amplitudes in rad/us.
///
/// Layout: ramp-up, then n_quench plateaus of length t_quench separated by
/// gaps of length quench_spacing, then ramp-down. Gaps return the randomized
/// channel to its idle value (0 for detuning, omega_q for Rabi) through linear
/// micro-ramps of length micro_ramp carved from the gap.
struct QuenchConfig {
    int n_quench = 4;
    double t_quench = 0.1;
    double quench_spacing = 0.1;
    double ramp_time = 0.05;
    double stage_budget = 1.0;
    double micro_ramp = 0.02;
    double gaussian_mean = from_mhz(2.5);
    double gaussian_sigma = from_mhz(2.5);
    QuenchChannel channel = QuenchChannel::detuning;
    double omega_q = from_mhz(2.5);
    // Rabi-channel draws, used when channel is rabi or both.
    double rabi_mean = from_mhz(1.25);
    double rabi_sigma = from_mhz(0.625);
    // Local-channel plateaus, drawn per quench and clipped to the local range.
    LocalQuenchMode local_mode = LocalQuenchMode::none;
    double local_mean = from_mhz(2.5);
    double local_sigma = from_mhz(2.5);

    double stage_duration() const;
    /// Throws std::invalid_argument on a budget or sigma violation.
    void check() const;
};

struct QuenchInstance {
    std::size_t instance_id = 0;
    std::uint64_t seed = 0;
    std::vector<double> amplitudes;       // randomized detuning plateaus (detuning / both)
    std::vector<double> rabi_amplitudes;  // randomized Rabi plateaus (rabi / both)
    std::vector<double> local_amplitudes;  // local-channel plateaus (random_mask)
    std::vector<bool> local_mask;
    std::size_t clip_events = 0;
    PulseSchedule fragment;

    /// Stable digest of the fragment breakpoints; equal fragments hash equal.
    std::uint64_t fragment_hash() const;
};

struct QuenchEnsemble {
    QuenchConfig config;
    std::uint64_t master_seed = 0;
    std::vector<QuenchInstance> instances;

    std::size_t total_draws() const;
    std::size_t clip_events() const;
    double clip_fraction() const;
};

/// Builds the schedule fragment for one set of plateau amplitudes. Rabi
/// micro-ramps are stretched when `profile` could not slew across them.
PulseSchedule quench_fragment(const QuenchConfig& config, const std::vector<double>& detuning,
                              const std::vector<double>& rabi, const std::vector<double>& local = {},
                              const std::vector<bool>& local_mask = {}, const HardwareProfile& profile = {});

/// Draws n_instances quench instances; each plateau amplitude is Normal(mu,
/// sigma^2) clipped to the profile's channel range. `n_atoms` sizes the local
/// mask and is required when the local channel is in use.
QuenchEnsemble sample_ensemble(const QuenchConfig& config, std::size_t n_instances,
                               std::uint64_t master_seed, const HardwareProfile& profile = {},
                               int n_atoms = 0);

/// sum_s p(s)^2
double second_moment(const ProbabilityDistribution& probs);

/// Unbiased collision estimate sum_s c_s (c_s - 1) / (N (N - 1)).
double second_moment_from_shots(std::span<const Bitstring> shots);

/// Haar expectation of sum_s P(s)^2 for a D-dimensional state of the given purity:
/// (1 + Tr rho^2) / (D + 1).
double haar_second_moment(std::size_t dimension, double purity = 1.0);

/// The same expectation per outcome, (1 + Tr rho^2) / (D (D + 1)).
double haar_second_moment_per_outcome(std::size_t dimension, double purity = 1.0);

struct ScanRow {
    int n_quench = 0;
    double m2_mean = 0.0;
    double m2_haar = 0.0;
    double abs_diff = 0.0;
    double stderr_mean = 0.0;
    std::size_t n_instances = 0;
    std::uint64_t seed = 0;
};

struct ScanRequest {
    QuenchConfig config_template;
    std::vector<int> n_quench_values;
    std::size_t n_instances = 200;
    AtomGeometry geometry;
    HardwareProfile profile;
    PropagatorConfig propagator;
    std::uint64_t master_seed = 0;
    int workers = 1;
};

/// Mean |M2 - M2_Haar| against the number of quenches, each instance evolved
/// from |0...0> through its quench fragment.
std::vector<ScanRow> convergence_scan(const ScanRequest& request);

/// CSV with header comment and columns n_quench,m2_mean,m2_haar,abs_diff,stderr,N_U,seed.
std::string scan_to_csv(const std::vector<ScanRow>& rows);

}  // namespace rydotoc
