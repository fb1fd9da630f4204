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

#include "json.hpp"

#include "rydotoc/otoc.hpp"

// Lightcone extraction and series comparison. Sites are 0-based here; the
// file formats and the command line add one.

namespace rydotoc {

struct Heatmap {
    std::vector<int> sites;
    std::vector<double> times;
    std::vector<std::vector<double>> values;  // [row][time]
    std::vector<int> mask;                    // site labels excluded from fits

    static Heatmap from_series(const OtocSeries& series, std::vector<int> mask = {});
    bool masked(int site) const;
    void check() const;
};

struct Arrival {
    int site = 0;
    bool present = false;
    double time = 0.0;
    double uncertainty = 0.0;
};

struct ArrivalOptions {
    double threshold = 0.5;    // fraction of each row's drop
    double cutoff_time = 4.0;  // us; later samples are ignored
    // per-point standard errors, same shape as the heatmap; optional
    const std::vector<std::vector<double>>* errors = nullptr;
};

/// Per unmasked site, the first time the row falls below
/// 1 - threshold (1 - min_row), linearly interpolated between grid points.
std::vector<Arrival> arrival_times(const Heatmap& hm, const ArrivalOptions& options = {});

enum class FitOrientation {
    time_vs_distance,  // t = m d + b, slope in us per site
    distance_vs_time,  // d = m t + b, slope in sites per us
};

FitOrientation parse_fit_orientation(const std::string& name);
std::string to_string(FitOrientation o);

struct LinearFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    double intercept_se = 0.0;
    double chi2_reduced = 0.0;
    std::vector<double> residuals;
};

struct LightconeFit {
    FitOrientation orientation = FitOrientation::time_vs_distance;
    int reference_site = 0;
    double threshold = 0.5;
    double cutoff_time = 4.0;
    std::vector<Arrival> arrivals;
    std::vector<int> fitted_sites;
    std::vector<double> distances;
    LinearFit fit;  // in the chosen orientation
    // The slope in both unit conventions: the t-vs-d fit and its reciprocal,
    // plus an independent d-vs-t fit.
    double us_per_site = 0.0;
    double us_per_site_se = 0.0;
    double sites_per_us = 0.0;
    double sites_per_us_se = 0.0;

    nlohmann::json to_json() const;
};

class FitError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Weighted least squares y = m x + b. Zero sigmas fall back to unit weights.
/// Covariance is scaled by the reduced chi-square when it exceeds one.
LinearFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma);

/// Fits arrival time against distance |site - reference_site| over present arrivals.
LightconeFit fit_lightcone(const std::vector<Arrival>& arrivals, int reference_site,
                           FitOrientation orientation = FitOrientation::time_vs_distance);

/// Heatmap, arrivals and fit in one call.
LightconeFit extract_lightcone(const OtocSeries& series, std::vector<int> mask, int reference_site,
                               double threshold, double cutoff_time,
                               FitOrientation orientation = FitOrientation::time_vs_distance);

enum class FrontModel { linear, logarithmic, exponential };

/// Placeholder for nonlinear fronts; only the linear model is implemented.
LinearFit fit_front(std::span<const double> distance, std::span<const double> time,
                    std::span<const double> sigma, FrontModel model);

struct CompareOptions {
    double max_time = -1.0;  // negative: whole common grid
    std::vector<int> mask;
    bool compare_slopes = true;
    int reference_site = 0;
    double threshold = 0.5;
    double cutoff_time = 4.0;
};

struct SiteDeviation {
    int site = 0;
    double rms = 0.0;
    double max_abs = 0.0;
};

struct CompareReport {
    std::string label_a;
    std::string label_b;
    std::vector<double> times;  // the common grid
    bool resampled = false;
    std::vector<SiteDeviation> sites;
    double rms = 0.0;
    double max_abs = 0.0;
    std::optional<LightconeFit> fit_a;
    std::optional<LightconeFit> fit_b;
    std::optional<double> slope_difference_sigma;  // |m_a - m_b| / joint sigma

    nlohmann::json to_json() const;
    std::string summary() const;
};

class GridError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Normalized OTOC deviations between two series. Site grids must match.
/// Time grids must match, or one must be a coarser grid inside the range of
/// the other, which is then linearly interpolated onto it.
CompareReport compare_series(const OtocSeries& a, const OtocSeries& b,
                             const CompareOptions& options = {});

}  // namespace rydotoc
