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

#include <algorithm>
#include <cmath>

#include "rydotoc/analysis.hpp"
#include "rydotoc/experiment_config.hpp"

namespace rydotoc {
namespace {

std::vector<double> grid(double step, int n) {
    std::vector<double> t;
    for (int k = 0; k < n; ++k) t.push_back(step * k);
    return t;
}

// Rows that drop from 1 to `floor` linearly over [t0, t0 + width].
OtocSeries ramp_series(const std::vector<double>& t0, double width, std::vector<double> times,
                       double floor = 0.0) {
    OtocSeries s = OtocSeries::zeros(static_cast<int>(t0.size()), std::move(times));
    for (std::size_t i = 0; i < t0.size(); ++i) {
        for (std::size_t k = 0; k < s.times.size(); ++k) {
            const double x = std::clamp((s.times[k] - t0[i]) / width, 0.0, 1.0);
            s.otoc[i][k] = 1.0 - (1.0 - floor) * x;
            s.raw[i][k] = s.otoc[i][k];
            s.norm[i][k] = 1.0;
        }
    }
    return s;
}

TEST(Analysis, StepArrivalIsInterpolated) {
    OtocSeries s = OtocSeries::zeros(1, grid(0.2, 11));
    for (std::size_t k = 0; k < s.times.size(); ++k) s.otoc[0][k] = s.times[k] <= 1.0 + 1e-12 ? 1.0 : 0.0;
    const auto a = arrival_times(Heatmap::from_series(s));
    ASSERT_EQ(a.size(), 1u);
    EXPECT_TRUE(a[0].present);
    EXPECT_NEAR(a[0].time, 1.1, 1e-12);
    EXPECT_GT(a[0].uncertainty, 0.0);
}

TEST(Analysis, FlatRowHasNoArrival) {
    OtocSeries s = OtocSeries::zeros(2, grid(0.1, 20));
    for (auto& v : s.otoc[0]) v = 1.0;
    for (std::size_t k = 0; k < 20; ++k) s.otoc[1][k] = k < 10 ? 1.0 : 0.2;
    const auto a = arrival_times(Heatmap::from_series(s));
    EXPECT_FALSE(a[0].present);
    EXPECT_TRUE(a[1].present);
}

TEST(Analysis, CutoffAndMaskAreRespected) {
    const OtocSeries s = ramp_series({0.5, 3.0}, 0.5, grid(0.1, 41));
    ArrivalOptions opt;
    opt.cutoff_time = 2.0;
    const auto a = arrival_times(Heatmap::from_series(s), opt);
    EXPECT_TRUE(a[0].present);
    EXPECT_FALSE(a[1].present);
    const auto m = arrival_times(Heatmap::from_series(s, {0}));
    EXPECT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].site, 1);
}

TEST(Analysis, StretchingTheGridStretchesArrivals) {
    const OtocSeries s = ramp_series({0.4, 1.0, 1.7}, 0.6, grid(0.1, 31), 0.2);
    OtocSeries t = s;
    for (auto& x : t.times) x *= 1.5;
    ArrivalOptions opt;
    opt.cutoff_time = 10.0;
    const auto a = arrival_times(Heatmap::from_series(s), opt);
    const auto b = arrival_times(Heatmap::from_series(t), opt);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i].time, 1.5 * a[i].time, 1e-12);
}

TEST(Analysis, SlopeScalesWithArrivalTimes) {
    std::vector<Arrival> arr;
    const double t[] = {0.5, 0.8, 1.3, 1.5, 2.1};
    for (int i = 0; i < 5; ++i) arr.push_back({i, true, t[i], 0.05});
    std::vector<Arrival> scaled = arr;
    for (auto& a : scaled) {
        a.time *= 2.5;
        a.uncertainty *= 2.5;
    }
    const LightconeFit f = fit_lightcone(arr, 5);
    const LightconeFit g = fit_lightcone(scaled, 5);
    EXPECT_NEAR(g.us_per_site, 2.5 * f.us_per_site, 1e-12);
    EXPECT_NEAR(g.us_per_site_se, 2.5 * f.us_per_site_se, 1e-12);
    EXPECT_GT(f.us_per_site_se, 0.0);
}

TEST(Analysis, MaskedRowsNeverInfluenceFits) {
    const OtocSeries s = ramp_series({1.6, 1.2, 0.8, 0.4, 0.1}, 0.3, grid(0.05, 61), 0.1);
    OtocSeries t = s;
    for (auto& v : t.otoc[1]) v = 0.5 * std::sin(7.0 * v);
    const LightconeFit a = extract_lightcone(s, {1, 4}, 4, 0.5, 4.0);
    const LightconeFit b = extract_lightcone(t, {1, 4}, 4, 0.5, 4.0);
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Analysis, LineFitRecoversExactLine) {
    const std::vector<double> d{1, 2, 3, 4, 5};
    std::vector<double> t;
    for (double x : d) t.push_back(0.4 * x + 0.1);
    const std::vector<double> sig(5, 0.01);
    const LinearFit f = weighted_line_fit(d, t, sig);
    EXPECT_NEAR(f.slope, 0.4, 1e-12);
    EXPECT_NEAR(f.intercept, 0.1, 1e-12);
    EXPECT_NEAR(f.chi2_reduced, 0.0, 1e-12);
    const std::vector<double> two{1, 2};
    EXPECT_THROW(weighted_line_fit(two, two, two), FitError);
}

TEST(Analysis, LightconeFitOnSyntheticCone) {
    // arrivals 0.4 d + 0.1 measured from the last site (ramp midpoints)
    std::vector<double> t0;
    for (int i = 0; i < 7; ++i) t0.push_back(0.4 * (6 - i) + 0.1 - 0.25);
    const OtocSeries s = ramp_series(t0, 0.5, grid(0.05, 81));
    const LightconeFit f = extract_lightcone(s, {}, 6, 0.5, 4.0);
    EXPECT_NEAR(f.us_per_site, 0.4, 1e-6);
    EXPECT_NEAR(f.sites_per_us, 2.5, 1e-4);
    EXPECT_EQ(f.fitted_sites.size(), 7u);

    const LightconeFit g = extract_lightcone(s, {}, 6, 0.5, 4.0, FitOrientation::distance_vs_time);
    EXPECT_NEAR(g.fit.slope, 2.5, 1e-4);

    // masking one site leaves the fitted slope of an exact cone unchanged
    const LightconeFit h = extract_lightcone(s, {3}, 6, 0.5, 4.0);
    EXPECT_EQ(h.fitted_sites.size(), 6u);
    EXPECT_NEAR(h.us_per_site, 0.4, 1e-6);

    const nlohmann::json j = f.to_json();
    EXPECT_EQ(j["schema"], "rydotoc lightcone_fit v1");
}

TEST(Analysis, LightconeFitIsTranslationEquivariant) {
    std::vector<double> t0{2.0, 1.6, 1.2, 0.8, 0.4};
    const OtocSeries s = ramp_series(t0, 0.3, grid(0.05, 81));
    std::vector<double> shifted;
    for (double x : t0) shifted.push_back(x + 0.5);
    const OtocSeries u = ramp_series(shifted, 0.3, grid(0.05, 81));
    const LightconeFit a = extract_lightcone(s, {}, 4, 0.5, 4.0);
    const LightconeFit b = extract_lightcone(u, {}, 4, 0.5, 4.0);
    EXPECT_NEAR(a.us_per_site, b.us_per_site, 1e-9);
    EXPECT_NEAR(b.fit.intercept - a.fit.intercept, 0.5, 1e-9);
}

TEST(Analysis, TooFewArrivalsThrow) {
    const OtocSeries s = ramp_series({0.4, 5.0, 5.0}, 0.3, grid(0.1, 41));
    EXPECT_THROW(extract_lightcone(s, {}, 0, 0.5, 4.0), FitError);
    const std::vector<double> x{1, 2, 3};
    EXPECT_THROW(fit_front(x, x, x, FrontModel::logarithmic), std::logic_error);
}

TEST(Analysis, OrientationNames) {
    EXPECT_EQ(parse_fit_orientation("time_vs_distance"), FitOrientation::time_vs_distance);
    EXPECT_EQ(parse_fit_orientation(to_string(FitOrientation::distance_vs_time)),
              FitOrientation::distance_vs_time);
    EXPECT_THROW(parse_fit_orientation("sideways"), std::invalid_argument);
}

TEST(Analysis, CompareIdenticalSeries) {
    const OtocSeries s = ramp_series({1.6, 1.2, 0.8, 0.4}, 0.3, grid(0.1, 31));
    CompareOptions opt;
    opt.reference_site = 3;
    const CompareReport r = compare_series(s, s, opt);
    EXPECT_EQ(r.rms, 0.0);
    EXPECT_EQ(r.max_abs, 0.0);
    ASSERT_TRUE(r.slope_difference_sigma.has_value());
    EXPECT_NEAR(*r.slope_difference_sigma, 0.0, 1e-12);
    EXPECT_FALSE(r.resampled);
    EXPECT_EQ(r.to_json()["schema"], "rydotoc compare_report v1");
    EXPECT_FALSE(r.summary().empty());
}

TEST(Analysis, CompareMaskAndMaxTime) {
    OtocSeries a = OtocSeries::zeros(3, grid(0.1, 11));
    OtocSeries b = a;
    b.otoc[2][3] = 0.5;
    b.otoc[0][9] = 0.2;
    CompareOptions opt;
    opt.compare_slopes = false;
    opt.mask = {2};
    opt.max_time = 0.5;
    const CompareReport r = compare_series(a, b, opt);
    EXPECT_EQ(r.max_abs, 0.0);
    opt.mask.clear();
    EXPECT_NEAR(compare_series(a, b, opt).max_abs, 0.5, 1e-15);
    opt.max_time = -1.0;
    opt.mask = {2};
    EXPECT_NEAR(compare_series(a, b, opt).max_abs, 0.2, 1e-15);
}

TEST(Analysis, CompareResamplesFinerGrid) {
    // a linear-in-time row is reproduced exactly by interpolation
    OtocSeries fine = OtocSeries::zeros(1, grid(0.05, 41));
    OtocSeries coarse = OtocSeries::zeros(1, grid(0.2, 11));
    for (std::size_t k = 0; k < fine.times.size(); ++k) fine.otoc[0][k] = 1.0 - 0.2 * fine.times[k];
    for (std::size_t k = 0; k < coarse.times.size(); ++k) coarse.otoc[0][k] = 1.0 - 0.2 * coarse.times[k];
    CompareOptions opt;
    opt.compare_slopes = false;
    const CompareReport r = compare_series(fine, coarse, opt);
    EXPECT_TRUE(r.resampled);
    EXPECT_EQ(r.times.size(), 11u);
    EXPECT_LT(r.max_abs, 1e-12);

    // a coarser grid inside the range is resampled onto; one reaching past it is not
    OtocSeries inside = OtocSeries::zeros(1, {0.0, 0.33, 0.71});
    EXPECT_NO_THROW(compare_series(fine, inside, opt));
    OtocSeries outside = OtocSeries::zeros(1, {0.0, 1.0, 3.0});
    EXPECT_THROW(compare_series(fine, outside, opt), GridError);
    OtocSeries wider = OtocSeries::zeros(2, grid(0.2, 11));
    EXPECT_THROW(compare_series(coarse, wider, opt), GridError);
}

// Causality of the front on the fiducial oracle: arrivals never decrease with
// distance from the butterfly site by more than their interpolation error.
TEST(Analysis, FiducialOracleArrivalsAreMonotone) {
    const ExperimentConfig c = load_experiment_config("fiducial", RYDOTOC_PRESET_DIR);
    const OtocExperiment& e = c.experiment;
    const OtocSeries o = exact_otoc_series(e.geometry, e.drive, e.profile, e.butterfly, e.times);
    const int ref = c.reference_site();
    ArrivalOptions opt;
    opt.threshold = c.analysis.threshold;
    opt.cutoff_time = c.analysis.cutoff_time;
    auto arr = arrival_times(Heatmap::from_series(o, c.analysis.mask_sites), opt);
    ASSERT_EQ(arr.size(), 7u);
    std::sort(arr.begin(), arr.end(),
              [ref](const Arrival& a, const Arrival& b) { return std::abs(a.site - ref) < std::abs(b.site - ref); });
    for (std::size_t k = 0; k + 1 < arr.size(); ++k) {
        ASSERT_TRUE(arr[k].present);
        EXPECT_GE(arr[k + 1].time, arr[k].time - (arr[k].uncertainty + arr[k + 1].uncertainty))
            << "sites " << arr[k].site + 1 << " and " << arr[k + 1].site + 1;
    }
    EXPECT_GT(arr.back().time, arr.front().time);
}

}  // namespace
}  // namespace rydotoc
