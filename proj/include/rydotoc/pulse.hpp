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

#include <optional>
#include <string>
#include <vector>

#include "rydotoc/quantum.hpp"

// Geometry, hardware limits, piecewise-linear control waveforms and the
// time-dependent Rydberg Hamiltonian
//
//   H(t) = sum_j c * Omega(t) X_j - sum_j Delta_j(t) n_j + sum_{j<k} C6 / r_jk^6 n_j n_k
//
// with c = 1 (written form) or c = 1/2 when rabi_half_convention is set.
// Every angular frequency is stored in rad/us; lengths are in um.

namespace rydotoc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Converts a "value/2pi in MHz" quantity to rad/us. The two are numerically
/// related by 2pi since 1 MHz = 1 / us.
inline constexpr double from_mhz(double value_over_2pi_mhz) { return kTwoPi * value_over_2pi_mhz; }
inline constexpr double to_mhz(double rad_per_us) { return rad_per_us / kTwoPi; }

struct Position {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Position&, const Position&) = default;
};

class AtomGeometry {
  public:
    AtomGeometry() = default;
    explicit AtomGeometry(std::vector<Position> positions, double lattice_spacing = 0.0);

    /// Positions (0, a, 2a, ...) along x.
    static AtomGeometry chain(int n_atoms, double spacing);

    int n_atoms() const { return static_cast<int>(positions_.size()); }
    const std::vector<Position>& positions() const { return positions_; }
    double lattice_spacing() const { return lattice_spacing_; }
    double distance(int j, int k) const;
    double min_pair_distance() const;

    friend bool operator==(const AtomGeometry&, const AtomGeometry&) = default;

  private:
    std::vector<Position> positions_;
    double lattice_spacing_ = 0.0;
};

struct Breakpoint {
    double time = 0.0;   // us
    double value = 0.0;  // rad/us
    friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// Piecewise-linear waveform. An empty waveform is identically zero.
class Waveform {
  public:
    Waveform() = default;
    explicit Waveform(std::vector<Breakpoint> points);

    static Waveform constant(double value, double duration);
    /// Builds a waveform from (duration, target value) legs starting at `start_value`.
    static Waveform from_legs(double start_value, const std::vector<std::pair<double, double>>& legs);

    bool empty() const { return points_.empty(); }
    const std::vector<Breakpoint>& breakpoints() const { return points_; }
    double duration() const { return points_.empty() ? 0.0 : points_.back().time; }

    /// Linear interpolation; holds the end values outside the breakpoint range.
    double value_at(double t) const;
    /// Slope of segment i (between breakpoints i and i+1).
    double slope(std::size_t segment) const;
    /// True when the waveform takes a single value on [t0, t1].
    bool constant_on(double t0, double t1) const;

    /// Concatenates `next` after this waveform, shifting its times by duration().
    Waveform& append(const Waveform& next);

    friend bool operator==(const Waveform&, const Waveform&) = default;

  private:
    std::vector<Breakpoint> points_;
};

struct ChannelLimits {
    double min = 0.0;    // rad/us
    double max = 0.0;    // rad/us
    double slew = 0.0;   // rad/us^2
    friend bool operator==(const ChannelLimits&, const ChannelLimits&) = default;
};

/// Limits that every schedule must respect before it is evolved, plus the
/// model constants (C6, drive convention) that go with the device class.
struct HardwareProfile {
    ChannelLimits omega{0.0, 15.8, kTwoPi * 100.0};
    ChannelLimits delta{-125.0, 125.0, kTwoPi * 2000.0};
    ChannelLimits local_delta{0.0, 125.0, kTwoPi * 2000.0};
    double max_duration = 4.0;        // us
    double min_atom_spacing = 4.0;    // um
    double c6 = kTwoPi * 862690.0;    // rad um^6 / us
    bool rabi_half_convention = false;

    /// Throws std::invalid_argument if any limit is non-positive or a range excludes 0.
    void check() const;

    friend bool operator==(const HardwareProfile&, const HardwareProfile&) = default;
};

struct LocalDetuning {
    std::vector<bool> mask;
    Waveform waveform;
    friend bool operator==(const LocalDetuning&, const LocalDetuning&) = default;
};

struct PulseSchedule {
    Waveform omega;
    Waveform delta;
    std::optional<LocalDetuning> local;
    double total_time = 0.0;

    /// Constant global drive held for `duration`.
    static PulseSchedule constant(double omega, double delta, double duration);

    /// Sorted union of all channel breakpoints inside [0, total_time], always
    /// including both end points.
    std::vector<double> segment_times() const;
    /// True when every channel is flat on [t0, t1].
    bool constant_on(double t0, double t1) const;
    /// Shortest interval between consecutive entries of segment_times().
    double shortest_segment() const;

    friend bool operator==(const PulseSchedule&, const PulseSchedule&) = default;
};

struct Violation {
    std::string kind;  // "duration", "slew", "range", "spacing", "span", "mask", "time"
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    bool has(const std::string& kind) const;
    std::string summary() const;
};

ValidationReport validate_schedule(const PulseSchedule& sched, const HardwareProfile& profile);
/// Also checks pairwise spacing and the local mask length against `geom`.
ValidationReport validate_schedule(const PulseSchedule& sched, const HardwareProfile& profile,
                                   const AtomGeometry& geom);

class ScheduleError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Quenched per-trajectory miscalibration applied on top of a schedule.
struct StaticPerturbation {
    double omega_scale = 1.0;
    double delta_offset = 0.0;  // rad/us, added on every site
};

/// Per-site couplings of H at one instant.
struct SiteFields {
    std::vector<double> x_coeff;  // coefficient of X_j
    RVector diagonal;             // full diagonal: -sum Delta_j n_j + interactions
};

/// Geometry-dependent pieces of the Rydberg Hamiltonian, precomputed once and
/// reused for every time sample.
class RydbergModel {
  public:
    RydbergModel(const AtomGeometry& geom, const HardwareProfile& profile);

    int n_atoms() const { return n_atoms_; }
    std::size_t dimension() const { return dim_; }
    const RVector& interaction_diagonal() const { return interaction_; }
    const HardwareProfile& profile() const { return profile_; }

    SiteFields fields(const PulseSchedule& sched, double t,
                      const StaticPerturbation& perturbation = {}) const;
    /// Fields at the midpoint value of each channel; used for linear segments.
    SiteFields fields_from_values(double omega, double delta, double local_delta,
                                  const std::vector<bool>* mask,
                                  const StaticPerturbation& perturbation = {}) const;

    RMatrix dense(const SiteFields& f) const;
    /// out = H in, matrix-free.
    void apply(const SiteFields& f, const CVector& in, CVector& out) const;

  private:
    int n_atoms_;
    std::size_t dim_;
    HardwareProfile profile_;
    RVector interaction_;
    std::vector<RVector> occupation_;  // n_j diagonal per site
};

/// H(t) as a dense Hermitian operator. Validates the schedule and `t` first.
Operator build_hamiltonian(const AtomGeometry& geom, const PulseSchedule& sched,
                           const HardwareProfile& profile, double t);

/// (C6 / omega)^(1/6) in um.
double blockade_radius(double omega, double c6);

}  // namespace rydotoc
