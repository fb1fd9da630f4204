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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rydotoc/design.hpp"
#include "rydotoc/evolution.hpp"
#include "rydotoc/pulse.hpp"

namespace rydotoc {

enum class ButterflyKind {
    phase,      // V = exp(i phi n_j), realizable as a local detuning pulse
    projector,  // V = n_j, only meaningful for the exact oracle
};

struct ButterflyOperator {
    ButterflyKind kind = ButterflyKind::phase;
    int site = 0;  // 0-based
    double phi = kPi;
    // Local detuning amplitude of the pulse that realizes the phase; the pulse
    // lasts phi / pulse_amplitude.
    double pulse_amplitude = from_mhz(5.0);

    double pulse_duration() const { return phi / pulse_amplitude; }
    /// Diagonal of V in the occupation basis.
    CVector diagonal(int n_atoms) const;
    /// Local-detuning schedule whose evolution (without interactions) is V.
    PulseSchedule pulse_schedule(int n_atoms) const;
    void check(int n_atoms) const;
};

/// How a measured occupation is turned into the correlated observable W_i.
enum class ObservableForm {
    centered,    // W_i = Z_i = 1 - 2 n_i (traceless)
    occupation,  // W_i = n_i
};

ObservableForm parse_observable_form(const std::string& name);
std::string to_string(ObservableForm form);

/// Which propagator conjugates W in the oracle.
enum class HeisenbergConvention {
    forward,   // W(t) = U W U^dagger, U = exp(-iHt) (the written convention)
    backward,  // W(t) = U^dagger W U, what a forward-evolved state measures
};

struct OtocExperiment {
    std::string name = "experiment";
    AtomGeometry geometry;
    HardwareProfile profile;
    PulseSchedule drive;
    QuenchConfig quench;
    ButterflyOperator butterfly;
    ObservableForm observable = ObservableForm::centered;
    std::vector<double> times;
    std::size_t n_instances = 200;
    std::size_t n_shots = 0;  // 0: exact expectation values
    std::optional<NoiseModel> noise;
    std::uint64_t seed = 0;
    int workers = 1;
    PropagatorConfig propagator;
    bool keep_shots = false;

    /// Throws std::invalid_argument describing the first problem found.
    void validate() const;
};

enum class Branch { plain, butterflied };
std::string to_string(Branch b);

struct BranchResult {
    std::size_t instance_id = 0;
    Branch branch = Branch::plain;
    std::uint64_t fragment_hash = 0;
    std::vector<std::vector<double>> occupancy;        // [time][site] estimates of <n_i(t)>
    std::vector<std::vector<Bitstring>> shots;         // [time], filled when keep_shots
};

/// Per-site, per-time OTOC estimates. Matrices are indexed [site][time].
struct OtocSeries {
    std::vector<double> times;
    int n_sites = 0;
    std::vector<std::vector<double>> raw;
    std::vector<std::vector<double>> norm;
    std::vector<std::vector<double>> otoc;
    std::vector<std::vector<double>> stderr_otoc;
    // metadata
    std::string source = "protocol";
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t n_instances = 0;
    std::size_t n_shots = 0;
    std::string observable = "centered";

    static OtocSeries zeros(int n_sites, std::vector<double> times);
};

struct ExperimentResult {
    QuenchEnsemble ensemble;
    std::vector<BranchResult> branches;  // instance-major: [2u] plain, [2u+1] butterflied
    OtocSeries series;
};

using ProgressCallback = std::function<void(std::size_t instance_id, std::size_t completed)>;

/// Runs the randomized protocol: for every quench instance, a plain branch
/// (quench, evolve, measure) and a butterflied branch (same quench, V,
/// evolve, measure), then the ensemble estimator raw = mean_u w_A w_B,
/// norm = mean_u w_A^2, otoc = raw / norm with jackknife errors over instances.
ExperimentResult run_experiment(const OtocExperiment& exp, const ProgressCallback& progress = {});

/// Ensemble estimator over already collected branches.
OtocSeries estimate_series(const std::vector<BranchResult>& branches, std::span<const double> times,
                           int n_sites, ObservableForm form);

struct OracleOptions {
    ObservableForm observable = ObservableForm::centered;
    HeisenbergConvention convention = HeisenbergConvention::forward;
    PropagatorConfig propagator;
    int max_atoms = 11;
};

struct OracleValue {
    double raw = 0.0;         // Tr[W(t) V^dagger W(t) V] / D
    double norm = 0.0;        // Tr[W(t) W(t)] / D
    double normalized = 0.0;  // raw / norm
};

class OracleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Infinite-temperature OTOC from the full propagator of `drive`.
OracleValue exact_otoc(const AtomGeometry& geom, const PulseSchedule& drive,
                       const HardwareProfile& profile, const ButterflyOperator& butterfly,
                       int site, double t, const OracleOptions& options = {});

/// exact_otoc for every site and every time of a sorted grid, sharing one propagator pass.
OtocSeries exact_otoc_series(const AtomGeometry& geom, const PulseSchedule& drive,
                             const HardwareProfile& profile, const ButterflyOperator& butterfly,
                             std::span<const double> times, const OracleOptions& options = {});

struct ScatterTable {
    double time = 0.0;
    int site = 0;
    std::vector<std::size_t> instance_ids;
    std::vector<double> plain;        // <W(t)>_u as measured occupations
    std::vector<double> butterflied;  // <V^dagger W(t) V>_u
    double pearson = 0.0;             // NaN when either column has zero variance
};

/// One row per instance at grid index `time_index` for `site`.
ScatterTable scatter_export(const std::vector<BranchResult>& branches, std::span<const double> times,
                            std::size_t time_index, int site);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

/// Total shots 2 N_U N_S.
std::uint64_t shot_budget(std::uint64_t n_instances, std::uint64_t n_shots);

}  // namespace rydotoc
