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
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rydotoc/pulse.hpp"
#include "rydotoc/random.hpp"

namespace rydotoc {

enum class PropagationMethod {
    // exact exponentials on flat substeps, fourth-order Magnus products on ramps
    exact_exponential,
    // classical Runge-Kutta on each substep; not norm preserving
    runge_kutta4,
};

struct PropagatorConfig {
    double dt = 1e-3;  // us
    PropagationMethod method = PropagationMethod::exact_exponential;
    double tolerance = 1e-8;  // allowed norm drift

    /// Throws if dt <= 0 or dt exceeds the shortest schedule segment.
    void check(const PulseSchedule& sched) const;
};

enum class DepolarizingForm {
    combined,       // single collapse operator sqrt(g) (X + Y + Z)
    three_channel,  // sqrt(g) X, sqrt(g) Y, sqrt(g) Z
};

struct NoiseModel {
    double gamma_depol = 0.0;            // 1/us
    double gamma_rg = 0.0;               // 1/us
    double delta_detuning_sigma = 0.0;   // rad/us
    double relative_rabi_sigma = 0.0;
    double position_sigma = 0.0;         // um
    double local_site_noise_multiplier = 2.0;
    int n_trajectories = 1;
    DepolarizingForm depolarizing_form = DepolarizingForm::combined;

    static NoiseModel none();
    /// gamma_depol = 0.05 / us with the remaining rates and sigmas of the
    /// reference noisy simulation.
    static NoiseModel appA_low();
    /// Same with gamma_depol = 0.2 / us.
    static NoiseModel appA_high();
    /// Throws std::invalid_argument for unknown names.
    static NoiseModel preset(const std::string& name);

    bool has_jumps() const { return gamma_depol > 0.0 || gamma_rg > 0.0; }
    bool has_static_noise() const {
        return delta_detuning_sigma > 0.0 || relative_rabi_sigma > 0.0 || position_sigma > 0.0;
    }
    bool is_noiseless() const { return !has_jumps() && !has_static_noise(); }
    void check() const;
};

struct JumpOperator {
    enum class Kind { depolarizing, pauli_x, pauli_y, pauli_z, raising };
    Kind kind;
    int site;
    double rate;  // 1/us, already including any per-site multiplier

    /// 2x2 single-site matrix including sqrt(rate).
    Eigen::Matrix2cd local_matrix() const;
};

/// Collapse operators of the noise model, one set per atom. Sites flagged in
/// `boosted_sites` get their rates scaled by local_site_noise_multiplier.
class JumpOperatorSet {
  public:
    JumpOperatorSet() = default;
    JumpOperatorSet(int n_atoms, const NoiseModel& noise, const std::vector<bool>& boosted_sites = {});

    int n_atoms() const { return n_atoms_; }
    const std::vector<JumpOperator>& operators() const { return ops_; }
    std::size_t size() const { return ops_.size(); }

    /// Diagonal of sum_k c_k^dagger c_k (every operator here yields a diagonal product).
    RVector decay_diagonal() const;
    /// c_k applied to psi.
    CVector apply(std::size_t k, const CVector& psi) const;
    /// c_k embedded in the full space; for tests and small systems.
    Operator embedded(std::size_t k) const;

  private:
    int n_atoms_ = 0;
    std::vector<JumpOperator> ops_;
};

/// Time-ordered propagation of states (or blocks of states) under a schedule.
///
/// Each schedule segment between breakpoints is cut into substeps no longer
/// than cfg.dt. On flat segments a substep applies exp(-i H_eff h) with
/// H_eff = H - (i/2) diag(decay); on ramps it applies the fourth-order
/// commutator-free product of two such exponentials built from H at the two
/// Gauss points. Each exponential is a Taylor series summed to machine precision. Blocks on flat Hermitian segments use an exact
/// eigendecomposition of H instead.
class Propagator {
  public:
    using StepHook = std::function<void(CVector& psi, double t)>;

    Propagator(const AtomGeometry& geom, const PulseSchedule& sched,
               const HardwareProfile& profile, PropagatorConfig cfg,
               StaticPerturbation perturbation = {}, RVector decay = {});

    const RydbergModel& model() const { return model_; }
    const PulseSchedule& schedule() const { return sched_; }
    const PropagatorConfig& config() const { return cfg_; }

    /// Evolves psi from t0 to t1. `after_step` runs after every substep.
    /// Safe to call concurrently.
    void advance(CVector& psi, double t0, double t1, const StepHook& after_step = {}) const;
    /// Evolves every column of `block` from t0 to t1. Fills an internal
    /// eigendecomposition cache, so not safe to call concurrently.
    void advance_block(CMatrix& block, double t0, double t1) const;

  private:
    struct Eigensystem {
        RMatrix vectors;
        RVector values;
    };

    template <typename F>
    void for_each_substep(double t0, double t1, F&& f) const;
    void exp_step(const SiteFields& f, double h, CVector& psi, double decay_scale = 1.0) const;
    void magnus4_step(double t, double h, CVector& psi) const;
    void rk4_step(double t, double h, CVector& psi) const;
    void apply_eff(const SiteFields& f, const CVector& in, CVector& out, double decay_scale = 1.0) const;
    double norm_bound(const SiteFields& f) const;
    const Eigensystem& eigensystem(std::size_t segment) const;

    RydbergModel model_;
    PulseSchedule sched_;
    PropagatorConfig cfg_;
    StaticPerturbation perturbation_;
    RVector decay_;
    std::vector<double> segment_times_;
    mutable std::map<std::size_t, Eigensystem> eigen_cache_;
};

class EvolutionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// U(t_final, 0)|psi>. Throws ScheduleError for invalid inputs and
/// EvolutionError when the norm drifts past cfg.tolerance.
StateVector evolve_unitary(const StateVector& state, const AtomGeometry& geom,
                           const PulseSchedule& sched, const HardwareProfile& profile,
                           const PropagatorConfig& cfg, double t_final);

/// Static per-trajectory noise draws.
struct TrajectoryDraw {
    StaticPerturbation perturbation;
    AtomGeometry geometry;
};

TrajectoryDraw draw_static_noise(const AtomGeometry& geom, const NoiseModel& noise, Rng& rng);

/// One stochastic unravelling of the Lindblad equation. The runner keeps the
/// waiting-time threshold and RNG between calls so a trajectory can be read out
/// at several times. Passing `shared_draw` reuses static noise drawn for an
/// earlier stage of the same trajectory.
class TrajectoryRunner {
  public:
    TrajectoryRunner(const AtomGeometry& geom, const PulseSchedule& sched,
                     const HardwareProfile& profile, const PropagatorConfig& cfg,
                     const NoiseModel& noise, std::uint64_t rng_seed,
                     const std::vector<bool>& boosted_sites = {},
                     const TrajectoryDraw* shared_draw = nullptr);

    void advance(CVector& psi, double t0, double t1);
    std::size_t jump_count() const { return jumps_; }
    const TrajectoryDraw& draw() const { return draw_; }

    /// Normalized conditional state; identity when the model has no jumps.
    static void finalize(CVector& psi, bool has_jumps);

  private:
    void jump(CVector& psi);

    Rng rng_;
    TrajectoryDraw draw_;
    JumpOperatorSet jumps_set_;
    std::unique_ptr<Propagator> propagator_;
    bool has_jumps_;
    double threshold_ = 0.0;
    std::size_t jumps_ = 0;
};

StateVector evolve_trajectory(const StateVector& state, const AtomGeometry& geom,
                              const PulseSchedule& sched, const HardwareProfile& profile,
                              const PropagatorConfig& cfg, const NoiseModel& noise,
                              std::uint64_t rng_seed, double t_final,
                              const std::vector<bool>& boosted_sites = {});

struct MeanWithError {
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Sample mean and standard error of the mean; needs at least two values.
MeanWithError trajectory_average(std::span<const double> values);

}  // namespace rydotoc
