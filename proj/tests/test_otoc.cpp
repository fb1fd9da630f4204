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

#include "rydotoc/analysis.hpp"
#include "rydotoc/otoc.hpp"

namespace rydotoc {
namespace {

OtocExperiment small_experiment(int n, std::size_t n_u, std::vector<double> times) {
    OtocExperiment e;
    e.geometry = AtomGeometry::chain(n, 9.5);
    e.drive = PulseSchedule::constant(from_mhz(2.5), from_mhz(1.5), 2.0);
    e.quench.local_mode = LocalQuenchMode::random_mask;
    e.butterfly.site = n - 1;
    e.times = std::move(times);
    e.n_instances = n_u;
    e.seed = 77;
    return e;
}

TEST(Otoc, ButterflyDiagonalAndPulse) {
    ButterflyOperator v;
    v.site = 1;
    const CVector d = v.diagonal(2);
    EXPECT_NEAR(std::abs(d(0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(d(1) + 1.0), 0.0, 1e-15);  // "01": site 1 excited, e^{i pi} = -1
    EXPECT_THROW(v.diagonal(1), std::out_of_range);

    // the pulse alone (no drive, one atom) reproduces V
    ButterflyOperator one;
    one.phi = 1.1;
    const PulseSchedule p = one.pulse_schedule(1);
    CVector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const StateVector out =
        evolve_unitary(StateVector(1, plus), AtomGeometry::chain(1, 0.0), p, HardwareProfile{}, {}, p.total_time);
    const CVector expected = one.diagonal(1).cwiseProduct(plus);
    EXPECT_LT((out.amplitudes() - expected).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(validate_schedule(p, HardwareProfile{}).ok());
}

TEST(Otoc, OracleAtTimeZero) {
    const AtomGeometry g = AtomGeometry::chain(3, 9.5);
    const PulseSchedule drive = PulseSchedule::constant(from_mhz(2.5), from_mhz(1.5), 1.0);
    ButterflyOperator v;
    v.site = 2;
    OracleOptions occ;
    occ.observable = ObservableForm::occupation;
    const OracleValue a = exact_otoc(g, drive, HardwareProfile{}, v, 0, 0.0, occ);
    EXPECT_NEAR(a.raw, 0.5, 1e-12);
    EXPECT_NEAR(a.normalized, 1.0, 1e-12);

    ButterflyOperator proj;
    proj.kind = ButterflyKind::projector;
    proj.site = 0;
    const OracleValue b = exact_otoc(g, drive, HardwareProfile{}, proj, 0, 0.0, occ);
    EXPECT_NEAR(b.raw, 0.5, 1e-12);

    const OracleValue c = exact_otoc(g, drive, HardwareProfile{}, v, 1, 0.0);
    EXPECT_NEAR(c.raw, 1.0, 1e-12);
    EXPECT_NEAR(c.normalized, 1.0, 1e-12);
}

TEST(Otoc, NonInteractingSitesNeverCorrelate) {
    const AtomGeometry far = AtomGeometry::chain(2, 2000.0);
    const PulseSchedule drive = PulseSchedule::constant(from_mhz(2.5), 0.0, 2.0);
    ButterflyOperator v;
    v.site = 1;
    OracleOptions occ;
    occ.observable = ObservableForm::occupation;
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(0.1 * k);
    const OtocSeries s = exact_otoc_series(far, drive, HardwareProfile{}, v, times, occ);
    for (double o : s.raw[0]) EXPECT_NEAR(o, s.raw[0][0], 1e-10);
}

TEST(Otoc, OracleIsBoundedAndConventionSymmetric) {
    const AtomGeometry g = AtomGeometry::chain(5, 9.5);
    const PulseSchedule drive = PulseSchedule::constant(from_mhz(2.5), from_mhz(1.5), 2.0);
    ButterflyOperator v;
    v.site = 4;
    v.phi = 1.3;
    const std::vector<double> times{0.0, 0.4, 0.9, 1.6};
    OracleOptions fwd, bwd;
    bwd.convention = HeisenbergConvention::backward;
    const OtocSeries a = exact_otoc_series(g, drive, HardwareProfile{}, v, times, fwd);
    const OtocSeries b = exact_otoc_series(g, drive, HardwareProfile{}, v, times, bwd);
    for (int i = 0; i < 5; ++i) {
        for (std::size_t k = 0; k < times.size(); ++k) {
            EXPECT_LE(std::abs(a.otoc[i][k]), 1.0 + 1e-12);
            EXPECT_NEAR(a.otoc[i][k], b.otoc[i][k], 1e-10);
        }
    }
}

TEST(Otoc, OracleDimensionGuard) {
    const AtomGeometry g = AtomGeometry::chain(12, 9.5);
    const PulseSchedule drive = PulseSchedule::constant(1.0, 0.0, 1.0);
    ButterflyOperator v;
    const std::vector<double> times{0.0};
    EXPECT_THROW(exact_otoc_series(g, drive, HardwareProfile{}, v, times), OracleError);
}

TEST(Otoc, ProtocolIdentityAtTimeZero) {
    const ExperimentResult r = run_experiment(small_experiment(4, 20, {0.0, 0.5}));
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.series.otoc[i][0], 1.0, 1e-10);
    for (std::size_t u = 0; u < 20; ++u) {
        EXPECT_EQ(r.branches[2 * u].fragment_hash, r.branches[2 * u + 1].fragment_hash);
    }
}

TEST(Otoc, ProtocolIsIndependentOfWorkers) {
    OtocExperiment e = small_experiment(4, 12, {0.0, 0.6, 1.2});
    const ExperimentResult a = run_experiment(e);
    e.workers = 4;
    const ExperimentResult b = run_experiment(e);
    EXPECT_EQ(a.series.otoc, b.series.otoc);
    EXPECT_EQ(a.series.stderr_otoc, b.series.stderr_otoc);
}

TEST(Otoc, EstimatorOnKnownBranches) {
    std::vector<BranchResult> br(4);
    const double occ_a[2] = {0.0, 1.0};  // W = Z: +1, -1
    const double occ_b[2] = {1.0, 1.0};  //          -1, -1
    for (std::size_t u = 0; u < 2; ++u) {
        br[2 * u] = {u, Branch::plain, 7, {{occ_a[u]}}, {}};
        br[2 * u + 1] = {u, Branch::butterflied, 7, {{occ_b[u]}}, {}};
    }
    const std::vector<double> t{0.3};
    const OtocSeries s = estimate_series(br, t, 1, ObservableForm::centered);
    EXPECT_DOUBLE_EQ(s.raw[0][0], 0.0);  // (-1 + 1) / 2
    EXPECT_DOUBLE_EQ(s.norm[0][0], 1.0);
    EXPECT_DOUBLE_EQ(s.otoc[0][0], 0.0);
    br[3].instance_id = 5;
    EXPECT_THROW(estimate_series(br, t, 1, ObservableForm::centered), std::invalid_argument);
    br[3].instance_id = 1;
    br[3].fragment_hash = 8;
    EXPECT_THROW(estimate_series(br, t, 1, ObservableForm::centered), std::invalid_argument);
}

TEST(Otoc, ScatterExport) {
    const ExperimentResult r = run_experiment(small_experiment(4, 30, {0.0, 1.5}));
    const ScatterTable t0 = scatter_export(r.branches, r.series.times, 0, 2);
    EXPECT_EQ(t0.plain.size(), 30u);
    EXPECT_GT(t0.pearson, 0.99);
    EXPECT_THROW(scatter_export(r.branches, r.series.times, 5, 2), std::out_of_range);
    std::vector<BranchResult> broken(r.branches.begin(), r.branches.end() - 1);
    EXPECT_THROW(scatter_export(broken, r.series.times, 0, 2), std::invalid_argument);

    OtocExperiment flat = small_experiment(3, 5, {0.0, 1.0});
    flat.quench.gaussian_sigma = 0.0;
    flat.quench.local_mode = LocalQuenchMode::none;
    const ExperimentResult f = run_experiment(flat);
    const ScatterTable tf = scatter_export(f.branches, f.series.times, 1, 0);
    for (double p : tf.plain) EXPECT_EQ(p, tf.plain[0]);
    for (double b : tf.butterflied) EXPECT_EQ(b, tf.butterflied[0]);
}

TEST(Otoc, ShotBudget) {
    EXPECT_EQ(shot_budget(200, 500), 200000u);
    EXPECT_EQ(shot_budget(1, 1), 2u);
    EXPECT_THROW(shot_budget(0, 5), std::invalid_argument);
}

TEST(Otoc, ShotModeConvergesToExactMode) {
    OtocExperiment e = small_experiment(3, 30, {0.5, 1.0});
    const ExperimentResult exact = run_experiment(e);
    std::vector<double> err;
    for (std::size_t ns : {100u, 1000u, 10000u}) {
        e.n_shots = ns;
        const ExperimentResult r = run_experiment(e);
        double ss = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (std::size_t k = 0; k < 2; ++k) {
                const double d = r.series.raw[i][k] - exact.series.raw[i][k];
                ss += d * d;
            }
        }
        err.push_back(std::sqrt(ss / 6.0));
    }
    // each tenfold increase should cut the error by about sqrt(10); require at least a halving
    EXPECT_LT(err[1], 0.5 * err[0]);
    EXPECT_LT(err[2], 0.5 * err[1]);
}

TEST(Otoc, JackknifeErrorsShrinkLikeInverseRoot) {
    std::vector<double> log_n, log_se;
    for (std::size_t n_u : {40u, 80u, 160u, 320u, 640u}) {
        OtocExperiment e = small_experiment(4, n_u, {1.0, 1.5});
        e.seed = 1000 + n_u;
        const ExperimentResult r = run_experiment(e);
        double mean_se = 0.0;
        for (int i = 0; i < 3; ++i) mean_se += r.series.stderr_otoc[i][0] + r.series.stderr_otoc[i][1];
        log_n.push_back(std::log(static_cast<double>(n_u)));
        log_se.push_back(std::log(mean_se / 6.0));
    }
    const std::vector<double> zero(log_n.size(), 0.0);
    const LinearFit f = weighted_line_fit(log_n, log_se, zero);
    EXPECT_NEAR(f.slope, -0.5, 0.1);
}

TEST(Otoc, NoisyProtocolRuns) {
    OtocExperiment e = small_experiment(3, 4, {0.0, 0.5});
    NoiseModel n = NoiseModel::appA_high();
    n.n_trajectories = 3;
    e.noise = n;
    const ExperimentResult a = run_experiment(e);
    const ExperimentResult b = run_experiment(e);
    EXPECT_EQ(a.series.otoc, b.series.otoc);
    for (const auto& row : a.series.otoc) {
        for (double v : row) EXPECT_TRUE(std::isfinite(v));
    }
    e.n_shots = 50;
    EXPECT_NO_THROW(run_experiment(e));
}

TEST(Otoc, ExperimentValidation) {
    OtocExperiment e = small_experiment(3, 4, {0.0, 0.5});
    e.times = {0.5, 0.4};
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e.times = {0.0, 3.0};
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e.times = {0.0};
    e.butterfly.kind = ButterflyKind::projector;
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e.butterfly.kind = ButterflyKind::phase;
    e.n_instances = 1;
    EXPECT_THROW(e.validate(), std::invalid_argument);
}

// The ensemble estimator tracks the oracle on a six-atom chain: the
// time-averaged |difference| stays below 0.1 on every site outside the
// analysis mask. The butterfly site itself is masked: there W(t) mixes
// single-site and extended strings, whose ensemble variances differ from
// the Haar values by different factors, so the ratio estimator is biased.
TEST(Otoc, EstimatorTracksOracleOnSmallChain) {
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(0.1 * k);
    OtocExperiment e = small_experiment(6, 200, times);
    const ExperimentResult r = run_experiment(e);
    const OtocSeries o = exact_otoc_series(e.geometry, e.drive, e.profile, e.butterfly, times);
    for (int i = 0; i < 5; ++i) {
        double mean_abs = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) mean_abs += std::abs(r.series.otoc[i][k] - o.otoc[i][k]);
        EXPECT_LE(mean_abs / times.size(), 0.1) << "site " << i + 1;
    }
}

}  // namespace
}  // namespace rydotoc
