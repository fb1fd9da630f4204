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

#include "rydotoc/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rydotoc {

namespace {

constexpr double kTimeEps = 1e-12;

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

void check_waveform(const Waveform& wf, const ChannelLimits& lim, const std::string& channel,
                    double total_time, ValidationReport& report) {
    if (wf.empty()) return;
    const auto& pts = wf.breakpoints();
    if (std::abs(pts.front().time) > kTimeEps) {
        report.violations.push_back({"span", channel + " does not start at t=0"});
    }
    if (std::abs(pts.back().time - total_time) > 1e-9) {
        report.violations.push_back(
            {"span", channel + " ends at " + fmt_double(pts.back().time) +
                         " us but the schedule lasts " + fmt_double(total_time) + " us"});
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double v = pts[i].value;
        if (v < lim.min - 1e-9 || v > lim.max + 1e-9) {
            report.violations.push_back({"range", channel + " value " + fmt_double(v) +
                                                      " rad/us at t=" + fmt_double(pts[i].time) +
                                                      " outside [" + fmt_double(lim.min) + ", " +
                                                      fmt_double(lim.max) + "]"});
        }
        if (i + 1 < pts.size()) {
            const double s = std::abs(wf.slope(i));
            if (s > lim.slew * (1.0 + 1e-9)) {
                report.violations.push_back({"slew", channel + " slope " + fmt_double(s) +
                                                         " rad/us^2 on [" +
                                                         fmt_double(pts[i].time) + ", " +
                                                         fmt_double(pts[i + 1].time) +
                                                         "] exceeds " + fmt_double(lim.slew)});
            }
        }
    }
}

}  // namespace

AtomGeometry::AtomGeometry(std::vector<Position> positions, double lattice_spacing)
    : positions_(std::move(positions)), lattice_spacing_(lattice_spacing) {
    if (positions_.empty()) throw std::invalid_argument("geometry needs at least one atom");
}

AtomGeometry AtomGeometry::chain(int n_atoms, double spacing) {
    if (n_atoms < 1) throw std::invalid_argument("chain needs at least one atom");
    if (n_atoms > 1 && !(spacing > 0.0)) throw std::invalid_argument("chain spacing must be positive");
    std::vector<Position> pos;
    pos.reserve(static_cast<std::size_t>(n_atoms));
    for (int j = 0; j < n_atoms; ++j) pos.push_back({spacing * j, 0.0});
    return AtomGeometry(std::move(pos), spacing);
}

double AtomGeometry::distance(int j, int k) const {
    const auto& a = positions_.at(static_cast<std::size_t>(j));
    const auto& b = positions_.at(static_cast<std::size_t>(k));
    return std::hypot(a.x - b.x, a.y - b.y);
}

double AtomGeometry::min_pair_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_atoms(); ++j) {
        for (int k = j + 1; k < n_atoms(); ++k) best = std::min(best, distance(j, k));
    }
    return best;
}

Waveform::Waveform(std::vector<Breakpoint> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i].time) || !std::isfinite(points_[i].value)) {
            throw ScheduleError("waveform breakpoints must be finite");
        }
        if (i == 0 && std::abs(points_[i].time) > kTimeEps) {
            throw ScheduleError("waveform must start at t=0");
        }
        if (i > 0 && !(points_[i].time > points_[i - 1].time)) {
            throw ScheduleError("waveform breakpoint times must be strictly increasing");
        }
    }
}

Waveform Waveform::constant(double value, double duration) {
    if (duration <= 0.0) return Waveform({{0.0, value}});
    return Waveform({{0.0, value}, {duration, value}});
}

Waveform Waveform::from_legs(double start_value,
                             const std::vector<std::pair<double, double>>& legs) {
    std::vector<Breakpoint> pts{{0.0, start_value}};
    double t = 0.0;
    for (const auto& [dur, value] : legs) {
        if (dur <= 0.0) continue;
        t += dur;
        pts.push_back({t, value});
    }
    return Waveform(std::move(pts));
}

double Waveform::value_at(double t) const {
    if (points_.empty()) return 0.0;
    if (t <= points_.front().time) return points_.front().value;
    if (t >= points_.back().time) return points_.back().value;
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](double x, const Breakpoint& b) { return x < b.time; });
    const Breakpoint& hi = *it;
    const Breakpoint& lo = *(it - 1);
    if (t == lo.time) return lo.value;
    const double frac = (t - lo.time) / (hi.time - lo.time);
    return lo.value + frac * (hi.value - lo.value);
}

double Waveform::slope(std::size_t segment) const {
    const auto& a = points_.at(segment);
    const auto& b = points_.at(segment + 1);
    return (b.value - a.value) / (b.time - a.time);
}

bool Waveform::constant_on(double t0, double t1) const {
    if (points_.size() <= 1) return true;
    const double v0 = value_at(t0);
    if (value_at(t1) != v0) return false;
    for (const auto& p : points_) {
        if (p.time > t0 && p.time < t1 && p.value != v0) return false;
    }
    return true;
}

Waveform& Waveform::append(const Waveform& next) {
    if (next.empty()) return *this;
    if (points_.empty()) {
        points_ = next.points_;
        return *this;
    }
    // piecewise-linear waveforms cannot jump, so the junction values must agree
    if (next.points_.front().value != points_.back().value) {
        throw ScheduleError("appending a waveform with a value jump at the junction");
    }
    const double shift = duration();
    for (std::size_t i = 1; i < next.points_.size(); ++i) {
        points_.push_back({next.points_[i].time + shift, next.points_[i].value});
    }
    return *this;
}

void HardwareProfile::check() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("hardware profile: ") + what + " must be positive");
    };
    positive(omega.max, "omega max");
    positive(omega.slew, "omega slew");
    positive(delta.slew, "delta slew");
    positive(local_delta.slew, "local delta slew");
    positive(max_duration, "max duration");
    positive(min_atom_spacing, "min atom spacing");
    positive(c6, "C6");
    if (!(delta.min <= 0.0 && delta.max >= 0.0)) {
        throw std::invalid_argument("hardware profile: delta range must contain 0");
    }
    if (!(omega.min <= 0.0 && omega.max > 0.0)) {
        throw std::invalid_argument("hardware profile: omega range must contain 0");
    }
    if (!(local_delta.min <= 0.0 && local_delta.max >= 0.0)) {
        throw std::invalid_argument("hardware profile: local delta range must contain 0");
    }
}

PulseSchedule PulseSchedule::constant(double omega, double delta, double duration) {
    PulseSchedule s;
    s.omega = Waveform::constant(omega, duration);
    s.delta = Waveform::constant(delta, duration);
    s.total_time = duration;
    return s;
}

std::vector<double> PulseSchedule::segment_times() const {
    std::vector<double> ts{0.0, total_time};
    auto add = [&](const Waveform& wf) {
        for (const auto& b : wf.breakpoints()) {
            if (b.time > 0.0 && b.time < total_time) ts.push_back(b.time);
        }
    };
    add(omega);
    add(delta);
    if (local) add(local->waveform);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::abs(a - b) <= kTimeEps; }),
             ts.end());
    return ts;
}

bool PulseSchedule::constant_on(double t0, double t1) const {
    return omega.constant_on(t0, t1) && delta.constant_on(t0, t1) &&
           (!local || local->waveform.constant_on(t0, t1));
}

double PulseSchedule::shortest_segment() const {
    const auto ts = segment_times();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < ts.size(); ++i) best = std::min(best, ts[i] - ts[i - 1]);
    return best;
}

bool ValidationReport::has(const std::string& kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "; ";
        os << violations[i].kind << ": " << violations[i].detail;
    }
    return os.str();
}

ValidationReport validate_schedule(const PulseSchedule& sched, const HardwareProfile& profile) {
    ValidationReport report;
    if (sched.total_time < 0.0 || !std::isfinite(sched.total_time)) {
        report.violations.push_back({"duration", "total time must be finite and non-negative"});
        return report;
    }
    if (sched.total_time > profile.max_duration + 1e-12) {
        report.violations.push_back({"duration", "total time " + fmt_double(sched.total_time) +
                                                     " us exceeds the " +
                                                     fmt_double(profile.max_duration) +
                                                     " us limit"});
    }
    check_waveform(sched.omega, profile.omega, "omega", sched.total_time, report);
    check_waveform(sched.delta, profile.delta, "delta", sched.total_time, report);
    if (sched.local) {
        check_waveform(sched.local->waveform, profile.local_delta, "local_delta",
                       sched.total_time, report);
    }
    return report;
}

ValidationReport validate_schedule(const PulseSchedule& sched, const HardwareProfile& profile,
                                   const AtomGeometry& geom) {
    ValidationReport report = validate_schedule(sched, profile);
    if (geom.n_atoms() > 1 && geom.min_pair_distance() < profile.min_atom_spacing - 1e-12) {
        report.violations.push_back({"spacing", "minimum pair distance " +
                                                    fmt_double(geom.min_pair_distance()) +
                                                    " um is below " +
                                                    fmt_double(profile.min_atom_spacing) + " um"});
    }
    if (sched.local && sched.local->mask.size() != static_cast<std::size_t>(geom.n_atoms())) {
        report.violations.push_back({"mask", "local detuning mask length differs from atom count"});
    }
    return report;
}

RydbergModel::RydbergModel(const AtomGeometry& geom, const HardwareProfile& profile)
    : n_atoms_(geom.n_atoms()), dim_(hilbert_dimension(geom.n_atoms())), profile_(profile) {
    const auto d = static_cast<Eigen::Index>(dim_);
    occupation_.assign(static_cast<std::size_t>(n_atoms_), RVector::Zero(d));
    for (int j = 0; j < n_atoms_; ++j) {
        const std::size_t m = site_mask(j, n_atoms_);
        for (std::size_t i = 0; i < dim_; ++i) {
            occupation_[static_cast<std::size_t>(j)](static_cast<Eigen::Index>(i)) = (i & m) ? 1.0 : 0.0;
        }
    }
    interaction_ = RVector::Zero(d);
    for (int j = 0; j < n_atoms_; ++j) {
        for (int k = j + 1; k < n_atoms_; ++k) {
            const double r = geom.distance(j, k);
            if (!(r > 0.0)) throw std::invalid_argument("coincident atoms in geometry");
            const double vjk = profile_.c6 / std::pow(r, 6);
            interaction_ += vjk * occupation_[static_cast<std::size_t>(j)].cwiseProduct(
                                      occupation_[static_cast<std::size_t>(k)]);
        }
    }
}

SiteFields RydbergModel::fields_from_values(double omega, double delta, double local_delta,
                                            const std::vector<bool>* mask,
                                            const StaticPerturbation& perturbation) const {
    SiteFields f;
    const double rabi = omega * perturbation.omega_scale *
                        (profile_.rabi_half_convention ? 0.5 : 1.0);
    f.x_coeff.assign(static_cast<std::size_t>(n_atoms_), rabi);
    f.diagonal = interaction_;
    for (int j = 0; j < n_atoms_; ++j) {
        double dj = delta + perturbation.delta_offset;
        if (mask && (*mask)[static_cast<std::size_t>(j)]) dj += local_delta;
        if (dj != 0.0) f.diagonal -= dj * occupation_[static_cast<std::size_t>(j)];
    }
    return f;
}

SiteFields RydbergModel::fields(const PulseSchedule& sched, double t,
                                const StaticPerturbation& perturbation) const {
    const std::vector<bool>* mask = nullptr;
    double local = 0.0;
    if (sched.local) {
        mask = &sched.local->mask;
        local = sched.local->waveform.value_at(t);
    }
    return fields_from_values(sched.omega.value_at(t), sched.delta.value_at(t), local, mask,
                              perturbation);
}

RMatrix RydbergModel::dense(const SiteFields& f) const {
    const auto d = static_cast<Eigen::Index>(dim_);
    RMatrix h = f.diagonal.asDiagonal();
    for (int j = 0; j < n_atoms_; ++j) {
        const double c = f.x_coeff[static_cast<std::size_t>(j)];
        if (c == 0.0) continue;
        const std::size_t m = site_mask(j, n_atoms_);
        for (Eigen::Index i = 0; i < d; ++i) {
            h(static_cast<Eigen::Index>(static_cast<std::size_t>(i) ^ m), i) += c;
        }
    }
    return h;
}

void RydbergModel::apply(const SiteFields& f, const CVector& in, CVector& out) const {
    out = f.diagonal.cwiseProduct(in);
    const auto d = static_cast<Eigen::Index>(dim_);
    for (int j = 0; j < n_atoms_; ++j) {
        const double c = f.x_coeff[static_cast<std::size_t>(j)];
        if (c == 0.0) continue;
        const std::size_t m = site_mask(j, n_atoms_);
        for (Eigen::Index i = 0; i < d; ++i) {
            out(i) += c * in(static_cast<Eigen::Index>(static_cast<std::size_t>(i) ^ m));
        }
    }
}

Operator build_hamiltonian(const AtomGeometry& geom, const PulseSchedule& sched,
                           const HardwareProfile& profile, double t) {
    const ValidationReport report = validate_schedule(sched, profile, geom);
    if (!report.ok()) throw ScheduleError("invalid schedule: " + report.summary());
    if (!(t >= 0.0 && t <= sched.total_time + 1e-12)) {
        throw std::out_of_range("time " + fmt_double(t) + " outside [0, " +
                                fmt_double(sched.total_time) + "]");
    }
    const RydbergModel model(geom, profile);
    return Operator::hermitian(model.dense(model.fields(sched, t)).cast<Complex>());
}

double blockade_radius(double omega, double c6) {
    if (!(omega > 0.0)) throw std::invalid_argument("blockade radius needs omega > 0");
    if (!(c6 > 0.0)) throw std::invalid_argument("blockade radius needs C6 > 0");
    return std::pow(c6 / omega, 1.0 / 6.0);
}

}  // namespace rydotoc
