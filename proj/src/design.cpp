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

#include "rydotoc/design.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

#include "rydotoc/format.hpp"
#include "rydotoc/parallel.hpp"
#include "rydotoc/random.hpp"

namespace rydotoc {

QuenchChannel parse_quench_channel(const std::string& name) {
    if (name == "detuning") return QuenchChannel::detuning;
    if (name == "rabi") return QuenchChannel::rabi;
    if (name == "both") return QuenchChannel::both;
    throw std::invalid_argument("unknown quench channel '" + name + "'");
}

std::string to_string(QuenchChannel channel) {
    switch (channel) {
        case QuenchChannel::detuning: return "detuning";
        case QuenchChannel::rabi: return "rabi";
        case QuenchChannel::both: return "both";
    }
    return "?";
}

LocalQuenchMode parse_local_quench_mode(const std::string& name) {
    if (name == "none") return LocalQuenchMode::none;
    if (name == "random_mask") return LocalQuenchMode::random_mask;
    throw std::invalid_argument("unknown local quench mode '" + name + "'");
}

std::string to_string(LocalQuenchMode mode) {
    return mode == LocalQuenchMode::none ? "none" : "random_mask";
}

double QuenchConfig::stage_duration() const {
    return n_quench * t_quench + (n_quench - 1) * quench_spacing + 2.0 * ramp_time;
}

void QuenchConfig::check() const {
    if (n_quench < 1) throw std::invalid_argument("n_quench must be at least 1");
    if (!(t_quench > 0.0) || !(ramp_time > 0.0)) {
        throw std::invalid_argument("quench and ramp durations must be positive");
    }
    if (gaussian_sigma < 0.0 || rabi_sigma < 0.0 || local_sigma < 0.0) {
        throw std::invalid_argument("quench sigma must be non-negative");
    }
    if (n_quench > 1 && !(quench_spacing >= 2.0 * micro_ramp && micro_ramp > 0.0)) {
        throw std::invalid_argument("quench spacing must hold two micro-ramps");
    }
    if (stage_duration() > stage_budget + 1e-12) {
        std::ostringstream msg;
        msg << "quench stage lasts " << stage_duration() << " us, over the " << stage_budget
            << " us budget";
        throw std::invalid_argument(msg.str());
    }
}

namespace {

/// Legs of one channel: ramp from 0 to the first plateau, plateaus separated by
/// idle gaps, ramp back to `end_value`.
Waveform plateau_waveform(const QuenchConfig& c, const std::vector<double>& plateaus,
                          double idle, double start_value, double end_value, double micro) {
    std::vector<std::pair<double, double>> legs;
    legs.emplace_back(c.ramp_time, plateaus.front());
    legs.emplace_back(c.t_quench, plateaus.front());
    for (std::size_t k = 1; k < plateaus.size(); ++k) {
        legs.emplace_back(micro, idle);
        legs.emplace_back(c.quench_spacing - 2.0 * micro, idle);
        legs.emplace_back(micro, plateaus[k]);
        legs.emplace_back(c.t_quench, plateaus[k]);
    }
    legs.emplace_back(c.ramp_time, end_value);
    return Waveform::from_legs(start_value, legs);
}

Waveform held_waveform(const QuenchConfig& c, double value) {
    const double inner = c.stage_duration() - 2.0 * c.ramp_time;
    return Waveform::from_legs(0.0, {{c.ramp_time, value}, {inner, value}, {c.ramp_time, 0.0}});
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t hash_waveform(std::uint64_t h, const Waveform& w) {
    for (const auto& b : w.breakpoints()) {
        h = fnv1a(h, &b.time, sizeof b.time);
        h = fnv1a(h, &b.value, sizeof b.value);
    }
    const std::uint64_t sep = 0xFFu;
    return fnv1a(h, &sep, sizeof sep);
}

double clip(double v, const ChannelLimits& lim, std::size_t& clips) {
    if (v < lim.min) {
        ++clips;
        return lim.min;
    }
    if (v > lim.max) {
        ++clips;
        return lim.max;
    }
    return v;
}

}  // namespace

PulseSchedule quench_fragment(const QuenchConfig& config, const std::vector<double>& detuning,
                              const std::vector<double>& rabi, const std::vector<double>& local,
                              const std::vector<bool>& local_mask, const HardwareProfile& profile) {
    config.check();
    // Rabi transitions may need longer micro-ramps to respect the slew limit
    double omega_micro = config.micro_ramp;
    if (profile.omega.slew > 0.0) {
        omega_micro = std::max(omega_micro, (profile.omega.max - profile.omega.min) / profile.omega.slew);
    }
    PulseSchedule s;
    s.total_time = config.stage_duration();
    const bool rand_delta = config.channel != QuenchChannel::rabi;
    const bool rand_rabi = config.channel != QuenchChannel::detuning;
    const auto n = static_cast<std::size_t>(config.n_quench);
    if ((rand_delta && detuning.size() != n) || (rand_rabi && rabi.size() != n)) {
        throw std::invalid_argument("plateau amplitude count differs from n_quench");
    }
    if (rand_rabi && config.n_quench > 1 && config.quench_spacing < 2.0 * omega_micro) {
        throw std::invalid_argument("quench spacing too short for slew-limited Rabi micro-ramps");
    }
    s.delta = rand_delta ? plateau_waveform(config, detuning, 0.0, 0.0, 0.0, config.micro_ramp)
                         : held_waveform(config, 0.0);
    s.omega = rand_rabi ? plateau_waveform(config, rabi, config.omega_q, 0.0, 0.0, omega_micro)
                        : held_waveform(config, config.omega_q);
    if (config.local_mode != LocalQuenchMode::none) {
        if (local.size() != n || local_mask.empty()) {
            throw std::invalid_argument("local quench needs one amplitude per plateau and a mask");
        }
        s.local = LocalDetuning{local_mask, plateau_waveform(config, local, 0.0, 0.0, 0.0, config.micro_ramp)};
    }
    return s;
}

std::uint64_t QuenchInstance::fragment_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    h = hash_waveform(h, fragment.omega);
    h = hash_waveform(h, fragment.delta);
    if (fragment.local) h = hash_waveform(h, fragment.local->waveform);
    return fnv1a(h, &fragment.total_time, sizeof fragment.total_time);
}

std::size_t QuenchEnsemble::total_draws() const {
    std::size_t n = 0;
    for (const auto& inst : instances) {
        n += inst.amplitudes.size() + inst.rabi_amplitudes.size() + inst.local_amplitudes.size();
    }
    return n;
}

std::size_t QuenchEnsemble::clip_events() const {
    std::size_t n = 0;
    for (const auto& inst : instances) n += inst.clip_events;
    return n;
}

double QuenchEnsemble::clip_fraction() const {
    const std::size_t draws = total_draws();
    return draws == 0 ? 0.0 : static_cast<double>(clip_events()) / static_cast<double>(draws);
}

QuenchEnsemble sample_ensemble(const QuenchConfig& config, std::size_t n_instances,
                               std::uint64_t master_seed, const HardwareProfile& profile,
                               int n_atoms) {
    config.check();
    const bool use_local = config.local_mode != LocalQuenchMode::none;
    if (use_local && n_atoms < 1) throw std::invalid_argument("local quench needs the atom count");
    QuenchEnsemble ens{config, master_seed, {}};
    ens.instances.reserve(n_instances);
    const bool rand_delta = config.channel != QuenchChannel::rabi;
    const bool rand_rabi = config.channel != QuenchChannel::detuning;
    std::set<std::uint64_t> seen;
    for (std::size_t u = 0; u < n_instances; ++u) {
        QuenchInstance inst;
        inst.instance_id = u;
        inst.seed = derive_seed(master_seed, {0x51u, u});
        if (!seen.insert(inst.seed).second) throw std::logic_error("instance seed collision");
        Rng rng(inst.seed);
        for (int k = 0; k < config.n_quench; ++k) {
            // both normals are always drawn so channels keep aligned streams
            const double gd = standard_normal(rng);
            const double gr = standard_normal(rng);
            if (rand_delta) {
                inst.amplitudes.push_back(
                    clip(config.gaussian_mean + config.gaussian_sigma * gd, profile.delta, inst.clip_events));
            }
            if (rand_rabi) {
                inst.rabi_amplitudes.push_back(
                    clip(config.rabi_mean + config.rabi_sigma * gr, profile.omega, inst.clip_events));
            }
        }
        if (use_local) {
            // separate stream, so enabling the local channel leaves global draws unchanged
            Rng lrng(derive_seed(inst.seed, {0x4Cu}));
            for (int j = 0; j < n_atoms; ++j) inst.local_mask.push_back((lrng() >> 63) != 0);
            for (int k = 0; k < config.n_quench; ++k) {
                inst.local_amplitudes.push_back(clip(config.local_mean + config.local_sigma * standard_normal(lrng),
                                                     profile.local_delta, inst.clip_events));
            }
        }
        inst.fragment = quench_fragment(config, inst.amplitudes, inst.rabi_amplitudes, inst.local_amplitudes,
                                        inst.local_mask, profile);
        ens.instances.push_back(std::move(inst));
    }
    return ens;
}

double second_moment(const ProbabilityDistribution& probs) { return probs.probs().squaredNorm(); }

double second_moment_from_shots(std::span<const Bitstring> shots) {
    if (shots.size() < 2) throw std::invalid_argument("collision estimator needs at least two shots");
    std::map<Bitstring, std::size_t> counts;
    for (const auto& s : shots) ++counts[s];
    double pairs = 0.0;
    for (const auto& [_, c] : counts) pairs += static_cast<double>(c) * static_cast<double>(c - 1);
    const double n = static_cast<double>(shots.size());
    return pairs / (n * (n - 1.0));
}

double haar_second_moment(std::size_t dimension, double purity) {
    if (dimension < 2) throw std::invalid_argument("Haar moment needs dimension >= 2");
    const double d = static_cast<double>(dimension);
    if (!(purity >= 1.0 / d - 1e-12 && purity <= 1.0 + 1e-12)) {
        throw std::invalid_argument("purity must lie in [1/D, 1]");
    }
    return (1.0 + purity) / (d + 1.0);
}

double haar_second_moment_per_outcome(std::size_t dimension, double purity) {
    return haar_second_moment(dimension, purity) / static_cast<double>(dimension);
}

std::vector<ScanRow> convergence_scan(const ScanRequest& request) {
    if (request.n_instances < 10) throw std::invalid_argument("convergence scan needs N_U >= 10");
    const int n_atoms = request.geometry.n_atoms();
    const std::size_t dim = hilbert_dimension(n_atoms);
    std::vector<ScanRow> rows;
    for (int nq : request.n_quench_values) {
        QuenchConfig cfg = request.config_template;
        cfg.n_quench = nq;
        const QuenchEnsemble ens =
            sample_ensemble(cfg, request.n_instances, request.master_seed, request.profile, n_atoms);
        std::vector<double> m2(ens.instances.size());
        parallel_for(ens.instances.size(), request.workers, [&](std::size_t u) {
            const auto& inst = ens.instances[u];
            const StateVector out =
                evolve_unitary(StateVector::ground(n_atoms), request.geometry, inst.fragment,
                               request.profile, request.propagator, inst.fragment.total_time);
            RVector p = out.probabilities();
            p /= p.sum();
            m2[u] = second_moment(ProbabilityDistribution(std::move(p)));
        });
        const MeanWithError stats = trajectory_average(m2);
        ScanRow row;
        row.n_quench = nq;
        row.m2_mean = stats.mean;
        row.m2_haar = haar_second_moment(dim, 1.0);
        row.abs_diff = std::abs(stats.mean - row.m2_haar);
        row.stderr_mean = stats.standard_error;
        row.n_instances = request.n_instances;
        row.seed = request.master_seed;
        rows.push_back(row);
    }
    return rows;
}

std::string scan_to_csv(const std::vector<ScanRow>& rows) {
    std::ostringstream os;
    os << "# rydotoc m2_scan v1\n";
    os << "n_quench,m2_mean,m2_haar,abs_diff,stderr,N_U,seed\n";
    for (const auto& r : rows) {
        os << r.n_quench << ',' << format_number(r.m2_mean) << ',' << format_number(r.m2_haar)
           << ',' << format_number(r.abs_diff) << ',' << format_number(r.stderr_mean) << ','
           << r.n_instances << ',' << r.seed << '\n';
    }
    return os.str();
}

}  // namespace rydotoc
