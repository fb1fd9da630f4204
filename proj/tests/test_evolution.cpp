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

#include <gtest/gtest.h>

#include <cmath>

#include "rydotoc/evolution.hpp"

namespace rydotoc {
namespace {

const AtomGeometry kSingle = AtomGeometry::chain(1, 0.0);

// exp(-i H t)|psi> through a dense eigendecomposition; independent of the propagator.
CVector eigen_reference(const Operator& h, const CVector& psi, double t) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h.matrix());
    const CVector phases = (es.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * psi;
}

TEST(Evolution, RabiOscillationClosedForm) {
    const double omega = from_mhz(2.5);
    const PulseSchedule s = PulseSchedule::constant(omega, 0.0, 1.0);
    for (double t = 0.0; t <= 1.0 + 1e-12; t += 0.05) {
        const StateVector out = evolve_unitary(StateVector::ground(1), kSingle, s, HardwareProfile{}, {}, t);
        const double p1 = std::norm(out.amplitudes()(1));
        EXPECT_NEAR(p1, std::pow(std::sin(omega * t), 2), 1e-9) << "t=" << t;
    }
}

TEST(Evolution, DetunedRabiClosedForm) {
    // H = W X - D n: P1 = W^2 / (W^2 + D^2/4) sin^2(sqrt(W^2 + D^2/4) t)
    const double w = from_mhz(2.0), d = from_mhz(3.0);
    const PulseSchedule s = PulseSchedule::constant(w, d, 1.0);
    const double g = std::sqrt(w * w + d * d / 4.0);
    const StateVector out = evolve_unitary(StateVector::ground(1), kSingle, s, HardwareProfile{}, {}, 0.73);
    EXPECT_NEAR(std::norm(out.amplitudes()(1)), w * w / (g * g) * std::pow(std::sin(g * 0.73), 2), 1e-9);
}

TEST(Evolution, TimeDependentMatchesFineRk4) {
    const AtomGeometry geom = AtomGeometry::chain(3, 6.0);
    PulseSchedule s;
    s.total_time = 0.6;
    s.omega = Waveform::from_legs(0.0, {{0.1, 12.0}, {0.4, 12.0}, {0.1, 0.0}});
    s.delta = Waveform::from_legs(-20.0, {{0.6, 20.0}});
    PropagatorConfig fine;
    fine.method = PropagationMethod::runge_kutta4;
    fine.dt = 1e-5;
    fine.tolerance = 1e-6;
    const StateVector a = evolve_unitary(StateVector::ground(3), geom, s, HardwareProfile{}, {}, 0.6);
    const StateVector b = evolve_unitary(StateVector::ground(3), geom, s, HardwareProfile{}, fine, 0.6);
    EXPECT_LT((a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Evolution, FlatSegmentsMatchEigendecomposition) {
    const AtomGeometry geom = AtomGeometry::chain(4, 9.5);
    const HardwareProfile profile;
    const PulseSchedule s = PulseSchedule::constant(from_mhz(2.5), from_mhz(1.5), 2.0);
    const Operator h = build_hamiltonian(geom, s, profile, 0.0);
    const StateVector psi0 = StateVector::basis("0100");
    const CVector ref = eigen_reference(h, psi0.amplitudes(), 1.7);
    const StateVector out = evolve_unitary(psi0, geom, s, profile, {}, 1.7);
    EXPECT_LT((out.amplitudes() - ref).cwiseAbs().maxCoeff(), 1e-10);

    const Propagator prop(geom, s, profile, {});
    CMatrix block = CMatrix::Identity(16, 16);
    prop.advance_block(block, 0.0, 1.7);
    EXPECT_LT((block.col(4) - ref).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((block.adjoint() * block - CMatrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Evolution, NormPreservedOverLongRuns) {
    const AtomGeometry geom = AtomGeometry::chain(6, 9.5);
    const PulseSchedule s = PulseSchedule::constant(from_mhz(2.5), from_mhz(1.5), 4.0);
    const StateVector out = evolve_unitary(StateVector::ground(6), geom, s, HardwareProfile{}, {}, 4.0);
    EXPECT_NEAR(out.squared_norm(), 1.0, 1e-10);
}

TEST(Evolution, RejectsBadConfig) {
    const PulseSchedule s = PulseSchedule::constant(1.0, 0.0, 1.0);
    PropagatorConfig cfg;
    cfg.dt = 0.0;
    EXPECT_THROW(evolve_unitary(StateVector::ground(1), kSingle, s, HardwareProfile{}, cfg, 0.5),
                 std::invalid_argument);
    EXPECT_THROW(evolve_unitary(StateVector::ground(1), kSingle, s, HardwareProfile{}, {}, 1.5),
                 std::out_of_range);
}

TEST(Evolution, JumpOperatorProducts) {
    NoiseModel n;
    n.gamma_depol = 0.2;
    n.gamma_rg = 0.03;
    const JumpOperatorSet set(2, n, {false, true});
    const RVector decay = set.decay_diagonal();
    // site 0: 3 g_d + g_rg (n_0 = 0), site 1 doubled
    EXPECT_NEAR(decay(0), 3 * 0.2 + 0.03 + 2 * (3 * 0.2 + 0.03), 1e-12);
    // raising channel c^dag c = |0><0|: absent once the atom is excited
    EXPECT_NEAR(decay(3), 3 * 0.2 + 2 * 3 * 0.2, 1e-12);
    // the diagonal equals sum_k c_k^dag c_k built from dense operators
    CMatrix sum = CMatrix::Zero(4, 4);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const CMatrix c = set.embedded(k).matrix();
        sum += c.adjoint() * c;
    }
    EXPECT_LT((sum - CMatrix(decay.cast<Complex>().asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);

    NoiseModel three = n;
    three.depolarizing_form = DepolarizingForm::three_channel;
    EXPECT_LT((JumpOperatorSet(2, three, {false, true}).decay_diagonal() - decay).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evolution, NoiselessTrajectoryEqualsUnitary) {
    const AtomGeometry geom = AtomGeometry::chain(5, 9.5);
    const PulseSchedule s = PulseSchedule::constant(from_mhz(2.5), from_mhz(1.5), 2.0);
    const StateVector u = evolve_unitary(StateVector::ground(5), geom, s, HardwareProfile{}, {}, 2.0);
    const StateVector t =
        evolve_trajectory(StateVector::ground(5), geom, s, HardwareProfile{}, {}, NoiseModel::none(), 17, 2.0);
    EXPECT_EQ(u.amplitudes(), t.amplitudes());
}

TEST(Evolution, TrajectoriesAreSeeded) {
    const AtomGeometry geom = AtomGeometry::chain(3, 9.5);
    const PulseSchedule s = PulseSchedule::constant(from_mhz(2.5), from_mhz(1.5), 2.0);
    const NoiseModel noise = NoiseModel::appA_high();
    const auto a = evolve_trajectory(StateVector::ground(3), geom, s, HardwareProfile{}, {}, noise, 5, 2.0);
    const auto b = evolve_trajectory(StateVector::ground(3), geom, s, HardwareProfile{}, {}, noise, 5, 2.0);
    const auto c = evolve_trajectory(StateVector::ground(3), geom, s, HardwareProfile{}, {}, noise, 6, 2.0);
    EXPECT_EQ(a.amplitudes(), b.amplitudes());
    EXPECT_NE(a.amplitudes(), c.amplitudes());
    EXPECT_NEAR(a.squared_norm(), 1.0, 1e-12);
}

// <n>(t) of one atom under a single Lindblad channel, against the analytic
// two-level solution, within 3 Monte-Carlo standard errors.
void check_relaxation(const NoiseModel& noise, double t, double expected, int n_traj) {
    const PulseSchedule s = PulseSchedule::constant(0.0, 0.0, t);
    std::vector<double> pops;
    for (int r = 0; r < n_traj; ++r) {
        const StateVector out = evolve_trajectory(StateVector::ground(1), kSingle, s, HardwareProfile{}, {}, noise,
                                                  derive_seed(11, {static_cast<std::uint64_t>(r)}), t);
        pops.push_back(std::norm(out.amplitudes()(1)));
    }
    const MeanWithError m = trajectory_average(pops);
    EXPECT_LT(std::abs(m.mean - expected), 3.0 * m.standard_error + 1e-12)
        << "mean " << m.mean << " expected " << expected << " se " << m.standard_error;
}

TEST(Evolution, RaisingChannelMatchesLindblad) {
    NoiseModel n;
    n.gamma_rg = 0.3;
    check_relaxation(n, 3.0, 1.0 - std::exp(-0.3 * 3.0), 3000);
}

TEST(Evolution, DepolarizingChannelMatchesLindblad) {
    // sqrt(g)(X+Y+Z) = sqrt(3g) sigma_n with n along (1,1,1): the Bloch
    // component along n survives, the rest decays at 6g. From |0>,
    // P1(t) = (1 - exp(-6 g t)) / 3.
    NoiseModel n;
    n.gamma_depol = 0.2;
    check_relaxation(n, 1.0, (1.0 - std::exp(-1.2)) / 3.0, 3000);
}

TEST(Evolution, StaticNoiseDraws) {
    const NoiseModel noise = NoiseModel::appA_low();
    Rng a(3), b(3);
    const TrajectoryDraw da = draw_static_noise(AtomGeometry::chain(4, 9.5), noise, a);
    const TrajectoryDraw db = draw_static_noise(AtomGeometry::chain(4, 9.5), noise, b);
    EXPECT_EQ(da.geometry, db.geometry);
    EXPECT_NE(da.perturbation.omega_scale, 1.0);
    NoiseModel quiet;
    Rng c(3);
    EXPECT_EQ(draw_static_noise(AtomGeometry::chain(4, 9.5), quiet, c).geometry, AtomGeometry::chain(4, 9.5));
}

TEST(Evolution, TrajectoryAverageNeedsTwoValues) {
    const std::vector<double> one{1.0};
    EXPECT_THROW(trajectory_average(one), std::invalid_argument);
    const std::vector<double> v{1.0, 3.0};
    const MeanWithError m = trajectory_average(v);
    EXPECT_DOUBLE_EQ(m.mean, 2.0);
    EXPECT_DOUBLE_EQ(m.standard_error, 1.0);
}

TEST(Evolution, NoisePresets) {
    EXPECT_DOUBLE_EQ(NoiseModel::preset("appA_low").gamma_depol, 0.05);
    EXPECT_DOUBLE_EQ(NoiseModel::preset("appA_high").gamma_depol, 0.2);
    EXPECT_EQ(NoiseModel::preset("appA_high").n_trajectories, 600);
    EXPECT_TRUE(NoiseModel::preset("none").is_noiseless());
    EXPECT_THROW(NoiseModel::preset("loud"), std::invalid_argument);
}

}  // namespace
}  // namespace rydotoc
