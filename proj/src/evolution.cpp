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

#include "rydotoc/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rydotoc {

namespace {

constexpr double kSegmentEps = 1e-13;
// Taylor series terms are summed until they drop below this relative size.
constexpr double kTaylorRelTol2 = 1e-34;
// Largest |H| h handled by one Taylor evaluation before splitting.
constexpr double kTaylorMaxArg = 0.5;

void check_time_window(const PulseSchedule& sched, double t0, double t1) {
    if (!(t0 >= -1e-12 && t1 <= sched.total_time + 1e-9 && t0 <= t1 + 1e-15)) {
        std::ostringstream msg;
        msg << "propagation window [" << t0 << ", " << t1 << "] outside schedule [0, "
            << sched.total_time << "]";
        throw std::out_of_range(msg.str());
    }
}

}  // namespace

void PropagatorConfig::check(const PulseSchedule& sched) const {
    if (!(dt > 0.0)) throw std::invalid_argument("propagator dt must be positive");
    if (!(tolerance > 0.0)) throw std::invalid_argument("propagator tolerance must be positive");
    if (sched.total_time > 0.0 && dt > sched.shortest_segment() + 1e-12) {
        std::ostringstream msg;
        msg << "propagator dt " << dt << " us exceeds the shortest schedule segment "
            << sched.shortest_segment() << " us";
        throw std::invalid_argument(msg.str());
    }
}

NoiseModel NoiseModel::none() { return NoiseModel{}; }

NoiseModel NoiseModel::appA_low() {
    NoiseModel n;
    n.gamma_depol = 0.05;
    n.gamma_rg = 0.03;
    n.delta_detuning_sigma = from_mhz(0.18);
    n.relative_rabi_sigma = 0.018;
    n.position_sigma = 0.05;
    n.local_site_noise_multiplier = 2.0;
    n.n_trajectories = 600;
    return n;
}

NoiseModel NoiseModel::appA_high() {
    NoiseModel n = appA_low();
    n.gamma_depol = 0.2;
    return n;
}

NoiseModel NoiseModel::preset(const std::string& name) {
    if (name == "none") return none();
    if (name == "appA_low") return appA_low();
    if (name == "appA_high") return appA_high();
    throw std::invalid_argument("unknown noise preset '" + name +
                                "' (expected none, appA_low or appA_high)");
}

void NoiseModel::check() const {
    if (gamma_depol < 0.0 || gamma_rg < 0.0 || delta_detuning_sigma < 0.0 ||
        relative_rabi_sigma < 0.0 || position_sigma < 0.0 || local_site_noise_multiplier < 0.0) {
        throw std::invalid_argument("noise rates and sigmas must be non-negative");
    }
    if (n_trajectories < 1) throw std::invalid_argument("n_trajectories must be at least 1");
}

Eigen::Matrix2cd JumpOperator::local_matrix() const {
    const double s = std::sqrt(rate);
    const Complex i(0.0, 1.0);
    Eigen::Matrix2cd m;
    switch (kind) {
        case Kind::depolarizing: m << 1.0, 1.0 - i, 1.0 + i, -1.0; break;
        case Kind::pauli_x: m << 0.0, 1.0, 1.0, 0.0; break;
        case Kind::pauli_y: m << 0.0, -i, i, 0.0; break;
        case Kind::pauli_z: m << 1.0, 0.0, 0.0, -1.0; break;
        case Kind::raising: m << 0.0, 0.0, 1.0, 0.0; break;
    }
    return s * m;
}

JumpOperatorSet::JumpOperatorSet(int n_atoms, const NoiseModel& noise,
                                 const std::vector<bool>& boosted_sites)
    : n_atoms_(n_atoms) {
    noise.check();
    if (!boosted_sites.empty() && boosted_sites.size() != static_cast<std::size_t>(n_atoms)) {
        throw std::invalid_argument("boosted site mask length differs from atom count");
    }
    for (int j = 0; j < n_atoms; ++j) {
        const bool boosted = !boosted_sites.empty() && boosted_sites[static_cast<std::size_t>(j)];
        const double mult = boosted ? noise.local_site_noise_multiplier : 1.0;
        if (noise.gamma_depol > 0.0) {
            const double g = noise.gamma_depol * mult;
            if (noise.depolarizing_form == DepolarizingForm::combined) {
                ops_.push_back({JumpOperator::Kind::depolarizing, j, g});
            } else {
                ops_.push_back({JumpOperator::Kind::pauli_x, j, g});
                ops_.push_back({JumpOperator::Kind::pauli_y, j, g});
                ops_.push_back({JumpOperator::Kind::pauli_z, j, g});
            }
        }
        if (noise.gamma_rg > 0.0) ops_.push_back({JumpOperator::Kind::raising, j, noise.gamma_rg * mult});
    }
}

RVector JumpOperatorSet::decay_diagonal() const {
    const std::size_t dim = hilbert_dimension(n_atoms_);
    RVector diag = RVector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& op : ops_) {
        const Eigen::Matrix2cd c = op.local_matrix();
        const Eigen::Matrix2cd ctc = c.adjoint() * c;
        if (std::abs(ctc(0, 1)) > 1e-12) {
            throw std::logic_error("collapse operator with non-diagonal c^dagger c");
        }
        const std::size_t m = site_mask(op.site, n_atoms_);
        for (std::size_t i = 0; i < dim; ++i) {
            diag(static_cast<Eigen::Index>(i)) += ((i & m) ? ctc(1, 1) : ctc(0, 0)).real();
        }
    }
    return diag;
}

CVector JumpOperatorSet::apply(std::size_t k, const CVector& psi) const {
    const JumpOperator& op = ops_.at(k);
    const Eigen::Matrix2cd c = op.local_matrix();
    const std::size_t m = site_mask(op.site, n_atoms_);
    CVector out(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const int b = (idx & m) ? 1 : 0;
        const auto partner = static_cast<Eigen::Index>(idx ^ m);
        out(i) = c(b, b) * psi(i) + c(b, 1 - b) * psi(partner);
    }
    return out;
}

Operator JumpOperatorSet::embedded(std::size_t k) const {
    const JumpOperator& op = ops_.at(k);
    return embed_local(Operator(CMatrix(op.local_matrix())), op.site, n_atoms_);
}

Propagator::Propagator(const AtomGeometry& geom, const PulseSchedule& sched,
                       const HardwareProfile& profile, PropagatorConfig cfg,
                       StaticPerturbation perturbation, RVector decay)
    : model_(geom, profile),
      sched_(sched),
      cfg_(cfg),
      perturbation_(perturbation),
      decay_(std::move(decay)),
      segment_times_(sched.segment_times()) {
    cfg_.check(sched_);
    if (decay_.size() != 0 && static_cast<std::size_t>(decay_.size()) != model_.dimension()) {
        throw DimensionError("decay diagonal length differs from the Hilbert dimension");
    }
    if (sched_.local && sched_.local->mask.size() != static_cast<std::size_t>(model_.n_atoms())) {
        throw ScheduleError("local detuning mask length differs from atom count");
    }
}

void Propagator::apply_eff(const SiteFields& f, const CVector& in, CVector& out, double decay_scale) const {
    model_.apply(f, in, out);
    if (decay_.size() != 0) {
        out -= Complex(0.0, 0.5 * decay_scale) * decay_.cwiseProduct(in);
    }
}

double Propagator::norm_bound(const SiteFields& f) const {
    double b = f.diagonal.cwiseAbs().maxCoeff();
    for (double c : f.x_coeff) b += std::abs(c);
    if (decay_.size() != 0) b += 0.5 * decay_.cwiseAbs().maxCoeff();
    return b;
}

void Propagator::exp_step(const SiteFields& f, double h, CVector& psi, double decay_scale) const {
    const double arg = norm_bound(f) * h;
    const int splits = std::max(1, static_cast<int>(std::ceil(arg / kTaylorMaxArg)));
    const double hs = h / splits;
    CVector term(psi.size());
    CVector next(psi.size());
    for (int s = 0; s < splits; ++s) {
        term = psi;
        for (int k = 1; k <= 64; ++k) {
            apply_eff(f, term, next, decay_scale);
            term = next * Complex(0.0, -hs / k);
            psi += term;
            if (term.squaredNorm() <= kTaylorRelTol2 * psi.squaredNorm()) break;
        }
    }
}

namespace {

SiteFields blend(double wa, const SiteFields& a, double wb, const SiteFields& b) {
    SiteFields out;
    out.diagonal = wa * a.diagonal + wb * b.diagonal;
    out.x_coeff.resize(a.x_coeff.size());
    for (std::size_t j = 0; j < a.x_coeff.size(); ++j) out.x_coeff[j] = wa * a.x_coeff[j] + wb * b.x_coeff[j];
    return out;
}

}  // namespace

// exp(-i h (a1 H1 + a2 H2)) exp(-i h (a2 H1 + a1 H2)) with H1, H2 at the Gauss
// points; each factor carries half the decay.
void Propagator::magnus4_step(double t, double h, CVector& psi) const {
    const double r = std::sqrt(3.0) / 6.0;
    const double a1 = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0;
    const double a2 = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;
    const SiteFields f1 = model_.fields(sched_, t + (0.5 - r) * h, perturbation_);
    const SiteFields f2 = model_.fields(sched_, t + (0.5 + r) * h, perturbation_);
    // the factors are written for a full step, so the weights double
    exp_step(blend(2.0 * a2, f1, 2.0 * a1, f2), 0.5 * h, psi);
    exp_step(blend(2.0 * a1, f1, 2.0 * a2, f2), 0.5 * h, psi);
}

void Propagator::rk4_step(double t, double h, CVector& psi) const {
    const SiteFields f0 = model_.fields(sched_, t, perturbation_);
    const SiteFields fm = model_.fields(sched_, t + 0.5 * h, perturbation_);
    const SiteFields f1 = model_.fields(sched_, t + h, perturbation_);
    const Complex mi(0.0, -1.0);
    CVector k1(psi.size()), k2(psi.size()), k3(psi.size()), k4(psi.size());
    apply_eff(f0, psi, k1);
    k1 *= mi;
    apply_eff(fm, psi + 0.5 * h * k1, k2);
    k2 *= mi;
    apply_eff(fm, psi + 0.5 * h * k2, k3);
    k3 *= mi;
    apply_eff(f1, psi + h * k3, k4);
    k4 *= mi;
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename F>
void Propagator::for_each_substep(double t0, double t1, F&& f) const {
    for (std::size_t k = 0; k + 1 < segment_times_.size(); ++k) {
        const double a = std::max(t0, segment_times_[k]);
        const double b = std::min(t1, segment_times_[k + 1]);
        if (b - a <= kSegmentEps) continue;
        const double span = b - a;
        const auto m = static_cast<long>(std::max(1.0, std::ceil(span / cfg_.dt - 1e-9)));
        const double h = span / static_cast<double>(m);
        const bool flat = sched_.constant_on(segment_times_[k], segment_times_[k + 1]);
        SiteFields fixed;
        if (flat) fixed = model_.fields(sched_, 0.5 * (a + b), perturbation_);
        for (long s = 0; s < m; ++s) {
            f(flat ? &fixed : nullptr, a + static_cast<double>(s) * h, h);
        }
    }
}

void Propagator::advance(CVector& psi, double t0, double t1, const StepHook& after_step) const {
    check_time_window(sched_, t0, t1);
    if (static_cast<std::size_t>(psi.size()) != model_.dimension()) {
        throw DimensionError("state dimension differs from the model dimension");
    }
    for_each_substep(t0, t1, [&](const SiteFields* flat, double ts, double h) {
        if (cfg_.method == PropagationMethod::exact_exponential) {
            if (flat) {
                exp_step(*flat, h, psi);
            } else {
                magnus4_step(ts, h, psi);
            }
        } else {
            rk4_step(ts, h, psi);
        }
        if (after_step) after_step(psi, ts + h);
    });
}

const Propagator::Eigensystem& Propagator::eigensystem(std::size_t segment) const {
    auto it = eigen_cache_.find(segment);
    if (it != eigen_cache_.end()) return it->second;
    const double mid = 0.5 * (segment_times_[segment] + segment_times_[segment + 1]);
    const RMatrix h = model_.dense(model_.fields(sched_, mid, perturbation_));
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(h);
    if (solver.info() != Eigen::Success) throw EvolutionError("eigendecomposition failed");
    return eigen_cache_.emplace(segment, Eigensystem{solver.eigenvectors(), solver.eigenvalues()})
        .first->second;
}

void Propagator::advance_block(CMatrix& block, double t0, double t1) const {
    check_time_window(sched_, t0, t1);
    if (static_cast<std::size_t>(block.rows()) != model_.dimension()) {
        throw DimensionError("block row count differs from the model dimension");
    }
    const bool hermitian = decay_.size() == 0;
    for (std::size_t k = 0; k + 1 < segment_times_.size(); ++k) {
        const double a = std::max(t0, segment_times_[k]);
        const double b = std::min(t1, segment_times_[k + 1]);
        if (b - a <= kSegmentEps) continue;
        const bool flat = sched_.constant_on(segment_times_[k], segment_times_[k + 1]);
        if (flat && hermitian && cfg_.method == PropagationMethod::exact_exponential) {
            const Eigensystem& es = eigensystem(k);
            const CVector phases = (es.values * (b - a)).unaryExpr(
                [](double x) { return std::polar(1.0, -x); });
            const CMatrix rotated = es.vectors.transpose().cast<Complex>() * block;
            block = es.vectors.cast<Complex>() * (phases.asDiagonal() * rotated);
            continue;
        }
        for (Eigen::Index c = 0; c < block.cols(); ++c) {
            CVector col = block.col(c);
            advance(col, a, b);
            block.col(c) = col;
        }
    }
}

StateVector evolve_unitary(const StateVector& state, const AtomGeometry& geom,
                           const PulseSchedule& sched, const HardwareProfile& profile,
                           const PropagatorConfig& cfg, double t_final) {
    const ValidationReport report = validate_schedule(sched, profile, geom);
    if (!report.ok()) throw ScheduleError("invalid schedule: " + report.summary());
    if (state.n_atoms() != geom.n_atoms()) throw DimensionError("state and geometry atom counts differ");
    if (!(t_final >= 0.0 && t_final <= sched.total_time + 1e-9)) {
        throw std::out_of_range("t_final outside the schedule duration");
    }
    const Propagator prop(geom, sched, profile, cfg);
    CVector psi = state.amplitudes();
    const double norm0 = psi.norm();
    prop.advance(psi, 0.0, t_final);
    const double drift = std::abs(psi.norm() - norm0);
    if (drift > cfg.tolerance) {
        std::ostringstream msg;
        msg << "norm drift " << drift << " exceeds tolerance " << cfg.tolerance
            << "; reduce dt";
        throw EvolutionError(msg.str());
    }
    return StateVector(state.n_atoms(), std::move(psi));
}

TrajectoryDraw draw_static_noise(const AtomGeometry& geom, const NoiseModel& noise, Rng& rng) {
    TrajectoryDraw d{{}, geom};
    const double g_delta = standard_normal(rng);
    const double g_omega = standard_normal(rng);
    d.perturbation.delta_offset = noise.delta_detuning_sigma * g_delta;
    d.perturbation.omega_scale = 1.0 + noise.relative_rabi_sigma * g_omega;
    std::vector<Position> pos = geom.positions();
    for (auto& p : pos) {
        const double gx = standard_normal(rng);
        const double gy = standard_normal(rng);
        p.x += noise.position_sigma * gx;
        p.y += noise.position_sigma * gy;
    }
    if (noise.position_sigma > 0.0) d.geometry = AtomGeometry(std::move(pos), geom.lattice_spacing());
    return d;
}

TrajectoryRunner::TrajectoryRunner(const AtomGeometry& geom, const PulseSchedule& sched,
                                   const HardwareProfile& profile, const PropagatorConfig& cfg,
                                   const NoiseModel& noise, std::uint64_t rng_seed,
                                   const std::vector<bool>& boosted_sites,
                                   const TrajectoryDraw* shared_draw)
    : rng_(rng_seed),
      draw_(shared_draw ? *shared_draw : draw_static_noise(geom, noise, rng_)),
      jumps_set_(geom.n_atoms(), noise, boosted_sites),
      has_jumps_(noise.has_jumps()) {
    RVector decay;
    if (has_jumps_) decay = jumps_set_.decay_diagonal();
    propagator_ = std::make_unique<Propagator>(draw_.geometry, sched, profile, cfg,
                                               draw_.perturbation, std::move(decay));
    threshold_ = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
}

void TrajectoryRunner::jump(CVector& psi) {
    std::vector<double> weights(jumps_set_.size());
    std::vector<CVector> candidates;
    candidates.reserve(jumps_set_.size());
    double total = 0.0;
    for (std::size_t k = 0; k < jumps_set_.size(); ++k) {
        candidates.push_back(jumps_set_.apply(k, psi));
        weights[k] = candidates.back().squaredNorm();
        total += weights[k];
    }
    if (!(total > 0.0)) return;
    double u = std::uniform_real_distribution<double>(0.0, total)(rng_);
    std::size_t pick = 0;
    while (pick + 1 < weights.size() && u >= weights[pick]) {
        u -= weights[pick];
        ++pick;
    }
    psi = candidates[pick] / std::sqrt(weights[pick]);
    ++jumps_;
}

void TrajectoryRunner::advance(CVector& psi, double t0, double t1) {
    if (!has_jumps_) {
        propagator_->advance(psi, t0, t1);
        return;
    }
    propagator_->advance(psi, t0, t1, [this](CVector& state, double) {
        if (state.squaredNorm() <= threshold_) {
            jump(state);
            threshold_ = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        }
    });
}

void TrajectoryRunner::finalize(CVector& psi, bool has_jumps) {
    if (has_jumps) psi.normalize();
}

StateVector evolve_trajectory(const StateVector& state, const AtomGeometry& geom,
                              const PulseSchedule& sched, const HardwareProfile& profile,
                              const PropagatorConfig& cfg, const NoiseModel& noise,
                              std::uint64_t rng_seed, double t_final,
                              const std::vector<bool>& boosted_sites) {
    const ValidationReport report = validate_schedule(sched, profile, geom);
    if (!report.ok()) throw ScheduleError("invalid schedule: " + report.summary());
    if (state.n_atoms() != geom.n_atoms()) throw DimensionError("state and geometry atom counts differ");
    if (!(t_final >= 0.0 && t_final <= sched.total_time + 1e-9)) {
        throw std::out_of_range("t_final outside the schedule duration");
    }
    TrajectoryRunner runner(geom, sched, profile, cfg, noise, rng_seed, boosted_sites);
    CVector psi = state.amplitudes();
    runner.advance(psi, 0.0, t_final);
    TrajectoryRunner::finalize(psi, noise.has_jumps());
    return StateVector(state.n_atoms(), std::move(psi));
}

MeanWithError trajectory_average(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("trajectory_average needs at least two values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace rydotoc
