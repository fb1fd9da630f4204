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

#include "rydotoc/otoc.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "rydotoc/parallel.hpp"
#include "rydotoc/random.hpp"

namespace rydotoc {

namespace {

constexpr std::uint64_t kEnsembleStream = 1;
constexpr std::uint64_t kTrajectoryStream = 2;
constexpr std::uint64_t kShotStream = 3;

double observable_value(double occupancy, ObservableForm form) {
    return form == ObservableForm::centered ? 1.0 - 2.0 * occupancy : occupancy;
}

RVector observable_diagonal(int site, int n_atoms, ObservableForm form) {
    const std::size_t dim = hilbert_dimension(n_atoms);
    RVector w(static_cast<Eigen::Index>(dim));
    const std::size_t m = site_mask(site, n_atoms);
    for (std::size_t i = 0; i < dim; ++i) {
        w(static_cast<Eigen::Index>(i)) = observable_value((i & m) ? 1.0 : 0.0, form);
    }
    return w;
}

std::vector<double> probs_of(const CVector& psi) {
    std::vector<double> p(static_cast<std::size_t>(psi.size()));
    for (Eigen::Index i = 0; i < psi.size(); ++i) p[static_cast<std::size_t>(i)] = std::norm(psi(i));
    return p;
}

}  // namespace

CVector ButterflyOperator::diagonal(int n_atoms) const {
    check(n_atoms);
    const std::size_t dim = hilbert_dimension(n_atoms);
    const std::size_t m = site_mask(site, n_atoms);
    const Complex phase = std::polar(1.0, phi);
    CVector v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        const bool occ = (i & m) != 0;
        v(static_cast<Eigen::Index>(i)) =
            kind == ButterflyKind::phase ? (occ ? phase : Complex(1.0)) : Complex(occ ? 1.0 : 0.0);
    }
    return v;
}

PulseSchedule ButterflyOperator::pulse_schedule(int n_atoms) const {
    check(n_atoms);
    if (kind != ButterflyKind::phase) {
        throw std::invalid_argument("only the phase butterfly has a pulse realization");
    }
    PulseSchedule s;
    s.total_time = pulse_duration();
    std::vector<bool> mask(static_cast<std::size_t>(n_atoms), false);
    mask[static_cast<std::size_t>(site)] = true;
    // H = -Delta_loc n_j, so exp(-i H tau) = exp(i Delta_loc tau n_j)
    s.local = LocalDetuning{std::move(mask), Waveform::constant(pulse_amplitude, s.total_time)};
    return s;
}

void ButterflyOperator::check(int n_atoms) const {
    if (site < 0 || site >= n_atoms) {
        throw std::out_of_range("butterfly site " + std::to_string(site + 1) + " outside chain of " +
                                std::to_string(n_atoms));
    }
    if (kind == ButterflyKind::phase && !(pulse_amplitude > 0.0)) {
        throw std::invalid_argument("butterfly pulse amplitude must be positive");
    }
}

ObservableForm parse_observable_form(const std::string& name) {
    if (name == "centered") return ObservableForm::centered;
    if (name == "occupation") return ObservableForm::occupation;
    throw std::invalid_argument("unknown observable form '" + name + "'");
}

std::string to_string(ObservableForm form) {
    return form == ObservableForm::centered ? "centered" : "occupation";
}

std::string to_string(Branch b) { return b == Branch::plain ? "plain" : "butterflied"; }

void OtocExperiment::validate() const {
    profile.check();
    const int n = geometry.n_atoms();
    hilbert_dimension(n);
    const ValidationReport report = validate_schedule(drive, profile, geometry);
    if (!report.ok()) throw std::invalid_argument("drive schedule: " + report.summary());
    quench.check();
    butterfly.check(n);
    if (butterfly.kind != ButterflyKind::phase) {
        throw std::invalid_argument("the projector butterfly is oracle-only; the protocol needs a unitary V");
    }
    if (times.empty()) throw std::invalid_argument("time grid is empty");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < 0.0 || times[k] > drive.total_time + 1e-9) {
            throw std::invalid_argument("time grid point outside the drive duration");
        }
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw std::invalid_argument("time grid must be strictly increasing");
        }
    }
    if (n_instances < 2) throw std::invalid_argument("need at least two quench instances");
    if (noise) noise->check();
    propagator.check(drive);
    if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

OtocSeries OtocSeries::zeros(int n_sites, std::vector<double> times) {
    OtocSeries s;
    s.n_sites = n_sites;
    const std::vector<double> row(times.size(), 0.0);
    s.raw.assign(static_cast<std::size_t>(n_sites), row);
    s.norm = s.raw;
    s.otoc = s.raw;
    s.stderr_otoc = s.raw;
    s.times = std::move(times);
    return s;
}

ExperimentResult run_experiment(const OtocExperiment& exp, const ProgressCallback& progress) {
    exp.validate();
    const int n = exp.geometry.n_atoms();
    ExperimentResult result;
    result.ensemble = sample_ensemble(exp.quench, exp.n_instances,
                                      derive_seed(exp.seed, {kEnsembleStream}), exp.profile, n);
    for (const auto& inst : result.ensemble.instances) {
        const ValidationReport r = validate_schedule(inst.fragment, exp.profile, exp.geometry);
        if (!r.ok()) {
            throw std::invalid_argument("quench instance " + std::to_string(inst.instance_id) +
                                        ": " + r.summary());
        }
    }
    const CVector vdiag = exp.butterfly.diagonal(n);
    const std::size_t n_times = exp.times.size();
    const Propagator drive_prop(exp.geometry, exp.drive, exp.profile, exp.propagator);
    std::vector<bool> boosted(static_cast<std::size_t>(n), false);
    boosted[static_cast<std::size_t>(exp.butterfly.site)] = true;

    result.branches.resize(2 * exp.n_instances);
    std::atomic<std::size_t> completed{0};
    std::mutex progress_mutex;

    auto record = [&](BranchResult& br, std::size_t u, int b, std::size_t k,
                      const std::vector<double>& probs) {
        if (exp.n_shots == 0) {
            br.occupancy[k] = occupations(probs, n);
            return;
        }
        const auto seed = derive_seed(exp.seed, {kShotStream, u, static_cast<std::uint64_t>(b), k});
        std::vector<Bitstring> shots = sample_shots(probs, n, exp.n_shots, seed);
        br.occupancy[k] = occupancy_estimates(shots);
        if (exp.keep_shots) br.shots[k] = std::move(shots);
    };

    parallel_for(exp.n_instances, exp.workers, [&](std::size_t u) {
        const QuenchInstance& inst = result.ensemble.instances[u];
        std::array<BranchResult*, 2> out{&result.branches[2 * u], &result.branches[2 * u + 1]};
        for (int b = 0; b < 2; ++b) {
            out[b]->instance_id = u;
            out[b]->branch = b == 0 ? Branch::plain : Branch::butterflied;
            out[b]->fragment_hash = inst.fragment_hash();
            out[b]->occupancy.assign(n_times, {});
            if (exp.keep_shots) out[b]->shots.assign(n_times, {});
        }
        try {
            if (!exp.noise || exp.noise->is_noiseless()) {
                const Propagator quench_prop(exp.geometry, inst.fragment, exp.profile, exp.propagator);
                CVector psi = StateVector::ground(n).amplitudes();
                quench_prop.advance(psi, 0.0, inst.fragment.total_time);
                for (int b = 0; b < 2; ++b) {
                    CVector phi = b == 0 ? psi : CVector(vdiag.cwiseProduct(psi));
                    double t_prev = 0.0;
                    for (std::size_t k = 0; k < n_times; ++k) {
                        drive_prop.advance(phi, t_prev, exp.times[k]);
                        t_prev = exp.times[k];
                        record(*out[b], u, b, k, probs_of(phi));
                    }
                    const double drift = std::abs(phi.norm() - 1.0);
                    if (drift > exp.propagator.tolerance) {
                        throw EvolutionError("norm drift " + std::to_string(drift) + " exceeds tolerance");
                    }
                }
            } else {
                const NoiseModel& noise = *exp.noise;
                const std::size_t dim = hilbert_dimension(n);
                std::array<std::vector<std::vector<double>>, 2> avg;
                for (auto& a : avg) a.assign(n_times, std::vector<double>(dim, 0.0));
                const double w = 1.0 / noise.n_trajectories;
                for (int r = 0; r < noise.n_trajectories; ++r) {
                    const auto rr = static_cast<std::uint64_t>(r);
                    Rng draw_rng = make_rng(exp.seed, {kTrajectoryStream, u, rr, 0});
                    const TrajectoryDraw draw = draw_static_noise(exp.geometry, noise, draw_rng);
                    TrajectoryRunner quench_run(exp.geometry, inst.fragment, exp.profile, exp.propagator,
                                                noise, derive_seed(exp.seed, {kTrajectoryStream, u, rr, 1}),
                                                boosted, &draw);
                    CVector psi = StateVector::ground(n).amplitudes();
                    quench_run.advance(psi, 0.0, inst.fragment.total_time);
                    TrajectoryRunner::finalize(psi, noise.has_jumps());
                    for (int b = 0; b < 2; ++b) {
                        TrajectoryRunner drive_run(
                            exp.geometry, exp.drive, exp.profile, exp.propagator, noise,
                            derive_seed(exp.seed, {kTrajectoryStream, u, rr, 2 + static_cast<std::uint64_t>(b)}),
                            boosted, &draw);
                        CVector phi = b == 0 ? psi : CVector(vdiag.cwiseProduct(psi));
                        double t_prev = 0.0;
                        for (std::size_t k = 0; k < n_times; ++k) {
                            drive_run.advance(phi, t_prev, exp.times[k]);
                            t_prev = exp.times[k];
                            const double nrm2 = phi.squaredNorm();
                            for (std::size_t i = 0; i < dim; ++i) {
                                avg[b][k][i] += w * std::norm(phi(static_cast<Eigen::Index>(i))) / nrm2;
                            }
                        }
                    }
                }
                for (int b = 0; b < 2; ++b) {
                    for (std::size_t k = 0; k < n_times; ++k) {
                        double total = 0.0;
                        for (double p : avg[b][k]) total += p;
                        for (double& p : avg[b][k]) p /= total;
                        record(*out[b], u, b, k, avg[b][k]);
                    }
                }
            }
        } catch (const std::exception& e) {
            throw EvolutionError("quench instance " + std::to_string(u) + ": " + e.what());
        }
        const std::size_t done = ++completed;
        if (progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            progress(u, done);
        }
    });

    result.series = estimate_series(result.branches, exp.times, n, exp.observable);
    result.series.seed = exp.seed;
    result.series.n_shots = exp.n_shots;
    return result;
}

OtocSeries estimate_series(const std::vector<BranchResult>& branches, std::span<const double> times,
                           int n_sites, ObservableForm form) {
    if (branches.size() % 2 != 0 || branches.empty()) {
        throw std::invalid_argument("branches must come in plain/butterflied pairs");
    }
    const std::size_t n_u = branches.size() / 2;
    for (std::size_t u = 0; u < n_u; ++u) {
        const auto& a = branches[2 * u];
        const auto& b = branches[2 * u + 1];
        if (a.branch != Branch::plain || b.branch != Branch::butterflied ||
            a.instance_id != b.instance_id || a.fragment_hash != b.fragment_hash) {
            throw std::invalid_argument("branch pairing mismatch at instance " + std::to_string(u));
        }
    }
    OtocSeries s = OtocSeries::zeros(n_sites, std::vector<double>(times.begin(), times.end()));
    s.n_instances = n_u;
    s.observable = to_string(form);
    const double nu = static_cast<double>(n_u);
    std::vector<double> wa(n_u), wb(n_u);
    for (int i = 0; i < n_sites; ++i) {
        const auto si = static_cast<std::size_t>(i);
        for (std::size_t k = 0; k < times.size(); ++k) {
            double sab = 0.0, saa = 0.0;
            for (std::size_t u = 0; u < n_u; ++u) {
                wa[u] = observable_value(branches[2 * u].occupancy.at(k).at(si), form);
                wb[u] = observable_value(branches[2 * u + 1].occupancy.at(k).at(si), form);
                sab += wa[u] * wb[u];
                saa += wa[u] * wa[u];
            }
            s.raw[si][k] = sab / nu;
            s.norm[si][k] = saa / nu;
            s.otoc[si][k] = saa > 0.0 ? sab / saa : std::numeric_limits<double>::quiet_NaN();
            if (n_u < 2) continue;
            // leave-one-out ratios; the 1/(N_U - 1) factors cancel
            double mean_loo = 0.0;
            std::vector<double> loo(n_u);
            for (std::size_t u = 0; u < n_u; ++u) {
                const double den = saa - wa[u] * wa[u];
                loo[u] = den > 0.0 ? (sab - wa[u] * wb[u]) / den : s.otoc[si][k];
                mean_loo += loo[u];
            }
            mean_loo /= nu;
            double ss = 0.0;
            for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
            s.stderr_otoc[si][k] = std::sqrt((nu - 1.0) / nu * ss);
        }
    }
    return s;
}

OtocSeries exact_otoc_series(const AtomGeometry& geom, const PulseSchedule& drive,
                             const HardwareProfile& profile, const ButterflyOperator& butterfly,
                             std::span<const double> times, const OracleOptions& options) {
    const int n = geom.n_atoms();
    if (n > options.max_atoms) {
        throw OracleError("dimension guard: " + std::to_string(n) + " atoms exceeds the oracle limit of " +
                          std::to_string(options.max_atoms));
    }
    const ValidationReport report = validate_schedule(drive, profile, geom);
    if (!report.ok()) throw ScheduleError("invalid drive schedule: " + report.summary());
    butterfly.check(n);
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < 0.0 || times[k] > drive.total_time + 1e-9 || (k > 0 && !(times[k] > times[k - 1]))) {
            throw std::invalid_argument("oracle time grid must be increasing and inside the drive");
        }
    }
    const auto dim = static_cast<Eigen::Index>(hilbert_dimension(n));
    const CVector v = butterfly.diagonal(n);
    std::vector<RVector> w;
    for (int i = 0; i < n; ++i) w.push_back(observable_diagonal(i, n, options.observable));

    OtocSeries s = OtocSeries::zeros(n, std::vector<double>(times.begin(), times.end()));
    s.source = "oracle";
    s.observable = to_string(options.observable);
    const Propagator prop(geom, drive, profile, options.propagator);
    CMatrix u = CMatrix::Identity(dim, dim);
    double t_prev = 0.0;
    // phase matrix conj(v_a) v_b
    const CMatrix vv = v.conjugate() * v.transpose();
    for (std::size_t k = 0; k < times.size(); ++k) {
        prop.advance_block(u, t_prev, times[k]);
        t_prev = times[k];
        for (int i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            const CMatrix wt = options.convention == HeisenbergConvention::forward
                                   ? CMatrix(u * w[si].asDiagonal() * u.adjoint())
                                   : CMatrix(u.adjoint() * w[si].asDiagonal() * u);
            // Tr[M V^dag M V] = sum_ab M_ab M_ba conj(v_a) v_b
            const Complex cross = (wt.cwiseProduct(wt.transpose()).cwiseProduct(vv)).sum();
            const double sq = wt.cwiseAbs2().sum();
            if (std::abs(cross.imag()) / static_cast<double>(dim) >= 1e-8) {
                throw OracleError("oracle OTOC has an imaginary residue");
            }
            s.raw[si][k] = cross.real() / static_cast<double>(dim);
            s.norm[si][k] = sq / static_cast<double>(dim);
            s.otoc[si][k] = s.raw[si][k] / s.norm[si][k];
        }
    }
    return s;
}

OracleValue exact_otoc(const AtomGeometry& geom, const PulseSchedule& drive,
                       const HardwareProfile& profile, const ButterflyOperator& butterfly, int site,
                       double t, const OracleOptions& options) {
    if (site < 0 || site >= geom.n_atoms()) throw std::out_of_range("probe site out of range");
    const double grid[1] = {t};
    const OtocSeries s = exact_otoc_series(geom, drive, profile, butterfly, grid, options);
    const auto si = static_cast<std::size_t>(site);
    return {s.raw[si][0], s.norm[si][0], s.otoc[si][0]};
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson needs two equal columns");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

ScatterTable scatter_export(const std::vector<BranchResult>& branches, std::span<const double> times,
                            std::size_t time_index, int site) {
    if (time_index >= times.size()) throw std::out_of_range("scatter time index out of range");
    if (branches.size() % 2 != 0) throw std::invalid_argument("branch mismatch: odd branch count");
    ScatterTable t;
    t.time = times[time_index];
    t.site = site;
    for (std::size_t u = 0; 2 * u + 1 < branches.size(); ++u) {
        const auto& a = branches[2 * u];
        const auto& b = branches[2 * u + 1];
        if (a.instance_id != b.instance_id || a.branch != Branch::plain || b.branch != Branch::butterflied) {
            throw std::invalid_argument("branch mismatch at instance " + std::to_string(u));
        }
        t.instance_ids.push_back(a.instance_id);
        t.plain.push_back(a.occupancy.at(time_index).at(static_cast<std::size_t>(site)));
        t.butterflied.push_back(b.occupancy.at(time_index).at(static_cast<std::size_t>(site)));
    }
    t.pearson = t.plain.size() >= 2 ? pearson_correlation(t.plain, t.butterflied)
                                    : std::numeric_limits<double>::quiet_NaN();
    return t;
}

std::uint64_t shot_budget(std::uint64_t n_instances, std::uint64_t n_shots) {
    if (n_instances < 1 || n_shots < 1) throw std::invalid_argument("shot budget needs N_U >= 1 and N_S >= 1");
    return 2 * n_instances * n_shots;
}

}  // namespace rydotoc
