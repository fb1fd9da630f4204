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

#include "rydotoc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rydotoc/format.hpp"

namespace rydotoc {

namespace {

// Rows whose total drop is below this carry no front.
constexpr double kMinDrop = 1e-6;
constexpr double kGridTol = 1e-9;

double interpolate(std::span<const double> t, std::span<const double> v, double x) {
    auto it = std::lower_bound(t.begin(), t.end(), x - kGridTol);
    const auto k = static_cast<std::size_t>(it - t.begin());
    if (k < t.size() && std::abs(t[k] - x) <= kGridTol) return v[k];
    if (k == 0 || k >= t.size()) throw GridError("interpolation point outside the grid");
    const double f = (x - t[k - 1]) / (t[k] - t[k - 1]);
    return v[k - 1] + f * (v[k] - v[k - 1]);
}

nlohmann::json fit_json(const LinearFit& f) {
    return {{"slope", f.slope},
            {"slope_se", f.slope_se},
            {"intercept", f.intercept},
            {"intercept_se", f.intercept_se},
            {"chi2_reduced", f.chi2_reduced},
            {"residuals", f.residuals}};
}

}  // namespace

Heatmap Heatmap::from_series(const OtocSeries& series, std::vector<int> mask) {
    Heatmap hm;
    for (int i = 0; i < series.n_sites; ++i) hm.sites.push_back(i);
    hm.times = series.times;
    hm.values = series.otoc;
    hm.mask = std::move(mask);
    hm.check();
    return hm;
}

bool Heatmap::masked(int site) const { return std::find(mask.begin(), mask.end(), site) != mask.end(); }

void Heatmap::check() const {
    if (times.empty() || sites.empty()) throw std::invalid_argument("empty heatmap grid");
    if (values.size() != sites.size()) throw std::invalid_argument("heatmap row count differs from site count");
    for (const auto& row : values) {
        if (row.size() != times.size()) throw std::invalid_argument("heatmap row length differs from time grid");
    }
}

std::vector<Arrival> arrival_times(const Heatmap& hm, const ArrivalOptions& options) {
    hm.check();
    if (!(options.threshold > 0.0 && options.threshold < 1.0)) {
        throw std::invalid_argument("threshold must lie in (0, 1)");
    }
    std::size_t n_t = 0;
    while (n_t < hm.times.size() && hm.times[n_t] <= options.cutoff_time + kGridTol) ++n_t;
    if (n_t == 0) throw std::invalid_argument("no grid points before the cutoff time");

    std::vector<Arrival> out;
    for (std::size_t r = 0; r < hm.sites.size(); ++r) {
        if (hm.masked(hm.sites[r])) continue;
        const auto& row = hm.values[r];
        Arrival a;
        a.site = hm.sites[r];
        const double lo = *std::min_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n_t));
        if (1.0 - lo > kMinDrop) {
            const double level = 1.0 - options.threshold * (1.0 - lo);
            for (std::size_t k = 0; k < n_t; ++k) {
                if (!(row[k] < level)) continue;
                a.present = true;
                if (k == 0) {
                    a.time = hm.times[0];
                    const double h = n_t > 1 ? hm.times[1] - hm.times[0] : 0.0;
                    a.uncertainty = h / std::sqrt(12.0);
                    break;
                }
                const double h = hm.times[k] - hm.times[k - 1];
                const double drop = row[k - 1] - row[k];
                a.time = hm.times[k - 1] + (row[k - 1] - level) / drop * h;
                double var = h * h / 12.0;
                if (options.errors) {
                    const auto& e = (*options.errors).at(r);
                    const double sigma_o = std::max(e.at(k - 1), e.at(k));
                    const double s = sigma_o * h / drop;
                    var += s * s;
                }
                a.uncertainty = std::sqrt(var);
                break;
            }
        }
        out.push_back(a);
    }
    return out;
}

FitOrientation parse_fit_orientation(const std::string& name) {
    if (name == "time_vs_distance" || name == "t-vs-site") return FitOrientation::time_vs_distance;
    if (name == "distance_vs_time" || name == "site-vs-t") return FitOrientation::distance_vs_time;
    throw std::invalid_argument("unknown fit orientation '" + name + "'");
}

std::string to_string(FitOrientation o) {
    return o == FitOrientation::time_vs_distance ? "time_vs_distance" : "distance_vs_time";
}

LinearFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma) {
    const std::size_t n = x.size();
    if (y.size() != n || sigma.size() != n) throw FitError("fit columns differ in length");
    if (n < 3) throw FitError("line fit needs at least 3 points, got " + std::to_string(n));
    double s_min = std::numeric_limits<double>::infinity();
    for (double s : sigma) {
        if (s < 0.0 || !std::isfinite(s)) throw FitError("fit sigmas must be finite and non-negative");
        if (s > 0.0) s_min = std::min(s_min, s);
    }
    const bool unit = !std::isfinite(s_min);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = unit ? 1.0 : std::max(sigma[i], s_min);
        w[i] = 1.0 / (s * s);
    }
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    if (!(det > 1e-12 * sw * std::max(sxx, 1e-300))) {
        throw FitError("degenerate fit: abscissae do not span two distinct values");
    }
    LinearFit f;
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        f.residuals.push_back(r);
        chi2 += w[i] * r * r;
    }
    f.chi2_reduced = chi2 / static_cast<double>(n - 2);
    const double scale = (unit || f.chi2_reduced > 1.0) ? f.chi2_reduced : 1.0;
    f.slope_se = std::sqrt(scale * sw / det);
    f.intercept_se = std::sqrt(scale * sxx / det);
    // an exact line still reports a strictly positive uncertainty
    const double eps = std::numeric_limits<double>::epsilon();
    f.slope_se = std::max(f.slope_se, eps * std::max(std::abs(f.slope), 1.0));
    f.intercept_se = std::max(f.intercept_se, eps * std::max(std::abs(f.intercept), 1.0));
    return f;
}

LightconeFit fit_lightcone(const std::vector<Arrival>& arrivals, int reference_site,
                           FitOrientation orientation) {
    LightconeFit lc;
    lc.orientation = orientation;
    lc.reference_site = reference_site;
    lc.arrivals = arrivals;
    std::vector<double> t, sig;
    for (const auto& a : arrivals) {
        if (!a.present) continue;
        lc.fitted_sites.push_back(a.site);
        lc.distances.push_back(std::abs(a.site - reference_site));
        t.push_back(a.time);
        sig.push_back(a.uncertainty);
    }
    if (lc.fitted_sites.size() < 3) {
        throw FitError("lightcone fit needs at least 3 arrivals, got " + std::to_string(lc.fitted_sites.size()));
    }
    const LinearFit tvd = weighted_line_fit(lc.distances, t, sig);
    lc.us_per_site = tvd.slope;
    lc.us_per_site_se = tvd.slope_se;
    lc.sites_per_us = 1.0 / tvd.slope;
    lc.sites_per_us_se = tvd.slope_se / (tvd.slope * tvd.slope);
    if (orientation == FitOrientation::time_vs_distance) {
        lc.fit = tvd;
    } else {
        // effective variance: a timing error sigma_t moves d by |dd/dt| sigma_t
        std::vector<double> sig_d(sig.size());
        for (std::size_t i = 0; i < sig.size(); ++i) sig_d[i] = sig[i] / std::abs(tvd.slope);
        lc.fit = weighted_line_fit(t, lc.distances, sig_d);
    }
    return lc;
}

LightconeFit extract_lightcone(const OtocSeries& series, std::vector<int> mask, int reference_site,
                               double threshold, double cutoff_time, FitOrientation orientation) {
    const Heatmap hm = Heatmap::from_series(series, std::move(mask));
    ArrivalOptions opts;
    opts.threshold = threshold;
    opts.cutoff_time = cutoff_time;
    bool has_errors = false;
    for (const auto& row : series.stderr_otoc) {
        for (double e : row) has_errors = has_errors || e > 0.0;
    }
    if (has_errors) opts.errors = &series.stderr_otoc;
    LightconeFit lc = fit_lightcone(arrival_times(hm, opts), reference_site, orientation);
    lc.threshold = threshold;
    lc.cutoff_time = cutoff_time;
    return lc;
}

LinearFit fit_front(std::span<const double> distance, std::span<const double> time,
                    std::span<const double> sigma, FrontModel model) {
    if (model != FrontModel::linear) {
        throw std::logic_error("only the linear front model is implemented");
    }
    return weighted_line_fit(distance, time, sigma);
}

nlohmann::json LightconeFit::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : arrivals) {
        nlohmann::json j = {{"site", a.site + 1}, {"present", a.present}};
        if (a.present) {
            j["t_us"] = a.time;
            j["uncertainty_us"] = a.uncertainty;
        }
        arr.push_back(j);
    }
    std::vector<int> sites1;
    for (int s : fitted_sites) sites1.push_back(s + 1);
    return {{"schema", "rydotoc lightcone_fit v1"},
            {"orientation", to_string(orientation)},
            {"reference_site", reference_site + 1},
            {"threshold", threshold},
            {"cutoff_time_us", cutoff_time},
            {"arrivals", arr},
            {"fitted_sites", sites1},
            {"distances", distances},
            {"fit", fit_json(fit)},
            {"slope_us_per_site", us_per_site},
            {"slope_us_per_site_se", us_per_site_se},
            {"slope_sites_per_us", sites_per_us},
            {"slope_sites_per_us_se", sites_per_us_se}};
}

CompareReport compare_series(const OtocSeries& a, const OtocSeries& b, const CompareOptions& options) {
    if (a.n_sites != b.n_sites) {
        throw GridError("site grids differ: " + std::to_string(a.n_sites) + " vs " + std::to_string(b.n_sites));
    }
    if (a.times.empty() || b.times.empty()) throw GridError("empty time grid");
    CompareReport rep;
    rep.label_a = a.source;
    rep.label_b = b.source;

    bool same = a.times.size() == b.times.size();
    for (std::size_t k = 0; same && k < a.times.size(); ++k) same = std::abs(a.times[k] - b.times[k]) <= kGridTol;
    const OtocSeries& coarse = (same || a.times.size() <= b.times.size()) ? a : b;
    const OtocSeries& fine = &coarse == &a ? b : a;
    rep.resampled = !same;
    if (!same && (coarse.times.front() < fine.times.front() - kGridTol ||
                  coarse.times.back() > fine.times.back() + kGridTol)) {
        throw GridError("time grids are incompatible: the coarser grid is not inside the finer one");
    }
    for (double t : coarse.times) {
        if (options.max_time < 0.0 || t <= options.max_time + kGridTol) rep.times.push_back(t);
    }
    if (rep.times.empty()) throw GridError("no common grid points below max_time");

    double ss_all = 0.0;
    std::size_t n_all = 0;
    for (int i = 0; i < a.n_sites; ++i) {
        if (std::find(options.mask.begin(), options.mask.end(), i) != options.mask.end()) continue;
        const auto si = static_cast<std::size_t>(i);
        SiteDeviation d;
        d.site = i;
        double ss = 0.0;
        for (std::size_t k = 0; k < rep.times.size(); ++k) {
            const double vc = coarse.otoc[si][k];
            const double vf = same ? fine.otoc[si][k] : interpolate(fine.times, fine.otoc[si], rep.times[k]);
            const double diff = vc - vf;
            ss += diff * diff;
            d.max_abs = std::max(d.max_abs, std::abs(diff));
        }
        d.rms = std::sqrt(ss / static_cast<double>(rep.times.size()));
        ss_all += ss;
        n_all += rep.times.size();
        rep.max_abs = std::max(rep.max_abs, d.max_abs);
        rep.sites.push_back(d);
    }
    rep.rms = n_all ? std::sqrt(ss_all / static_cast<double>(n_all)) : 0.0;

    if (options.compare_slopes) {
        try {
            rep.fit_a = extract_lightcone(a, options.mask, options.reference_site, options.threshold,
                                          options.cutoff_time);
            rep.fit_b = extract_lightcone(b, options.mask, options.reference_site, options.threshold,
                                          options.cutoff_time);
            const double joint = std::hypot(rep.fit_a->us_per_site_se, rep.fit_b->us_per_site_se);
            rep.slope_difference_sigma = std::abs(rep.fit_a->us_per_site - rep.fit_b->us_per_site) / joint;
        } catch (const FitError&) {
            rep.fit_a.reset();
            rep.fit_b.reset();
        }
    }
    return rep;
}

nlohmann::json CompareReport::to_json() const {
    nlohmann::json sites_j = nlohmann::json::array();
    for (const auto& d : sites) sites_j.push_back({{"site", d.site + 1}, {"rms", d.rms}, {"max_abs", d.max_abs}});
    nlohmann::json j = {{"schema", "rydotoc compare_report v1"},
                        {"a", label_a},
                        {"b", label_b},
                        {"resampled_to_coarser", resampled},
                        {"n_times", times.size()},
                        {"t_max_us", times.empty() ? 0.0 : times.back()},
                        {"sites", sites_j},
                        {"rms", rms},
                        {"max_abs", max_abs}};
    if (fit_a && fit_b) {
        j["slope"] = {{"a_us_per_site", fit_a->us_per_site},
                      {"a_us_per_site_se", fit_a->us_per_site_se},
                      {"b_us_per_site", fit_b->us_per_site},
                      {"b_us_per_site_se", fit_b->us_per_site_se},
                      {"difference_sigma", *slope_difference_sigma}};
    } else {
        j["slope"] = nullptr;
    }
    return j;
}

std::string CompareReport::summary() const {
    std::ostringstream out;
    out << "compare " << label_a << " vs " << label_b << " over " << times.size() << " times"
        << (resampled ? " (resampled to the coarser grid)" : "") << "\n";
    for (const auto& d : sites) {
        out << "  site " << d.site + 1 << ": rms " << format_number(d.rms) << ", max " << format_number(d.max_abs)
            << "\n";
    }
    out << "  overall: rms " << format_number(rms) << ", max " << format_number(max_abs) << "\n";
    if (fit_a && fit_b) {
        out << "  slope (us/site): " << format_number(fit_a->us_per_site) << " +- "
            << format_number(fit_a->us_per_site_se) << " vs " << format_number(fit_b->us_per_site) << " +- "
            << format_number(fit_b->us_per_site_se) << ", " << format_number(*slope_difference_sigma)
            << " sigma apart\n";
    } else {
        out << "  slope: not available (too few arrivals)\n";
    }
    return out.str();
}

}  // namespace rydotoc
