// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "gpuscale/stats.hpp"

namespace gpuscale {

namespace {

void validate_points(std::span<const ScalingPoint> points) {
    for (const auto& p : points) {
        if (p.num_gpus < 1)
            throw ValidationError("scaling point has non-positive num_gpus " + std::to_string(p.num_gpus));
        if (!(p.epoch_time_s > 0.0) || !std::isfinite(p.epoch_time_s))
            throw ValidationError("scaling point at N=" + std::to_string(p.num_gpus) +
                                  " has non-positive epoch time");
    }
}

std::size_t count_distinct_n(std::span<const ScalingPoint> points) {
    std::vector<int> ns;
    ns.reserve(points.size());
    for (const auto& p : points) ns.push_back(p.num_gpus);
    std::sort(ns.begin(), ns.end());
    return static_cast<std::size_t>(std::unique(ns.begin(), ns.end()) - ns.begin());
}

PowerLawFit fit_from_observations(std::span<const ScalingPoint> points) {
    Eigen::ArrayXd x(static_cast<Eigen::Index>(points.size()));
    Eigen::ArrayXd y(static_cast<Eigen::Index>(points.size()));
    int n_min = points.front().num_gpus;
    int n_max = points.front().num_gpus;
    for (std::size_t i = 0; i < points.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(points[i].num_gpus));
        y[static_cast<Eigen::Index>(i)] = std::log(points[i].epoch_time_s);
        n_min = std::min(n_min, points[i].num_gpus);
        n_max = std::max(n_max, points[i].num_gpus);
    }

    const stats::SimpleOls ols = stats::fit_simple_ols(x, y);

    PowerLawFit fit;
    fit.alpha = std::exp(ols.intercept);
    fit.beta = 0.0 - ols.slope; // keeps an exactly-zero slope positive zero
    fit.beta_stderr = ols.slope_stderr;
    fit.alpha_log_stderr = ols.intercept_stderr;
    fit.r_squared = ols.r_squared;
    fit.n_points = static_cast<int>(points.size());
    fit.n_min = n_min;
    fit.n_max = n_max;
    return fit;
}

} // namespace

PowerLawFit fit_power_law(std::span<const ScalingPoint> points, const FitOptions& opts) {
    validate_points(points);
    if (count_distinct_n(points) < 3)
        throw ValidationError("power-law fit needs at least 3 distinct GPU counts, got " +
                              std::to_string(count_distinct_n(points)));

    if (!opts.collapse_replicates) return fit_from_observations(points);

    // Collapse: arithmetic mean of the epoch times at each GPU count, one
    // observation per count.
    std::map<int, std::pair<double, std::size_t>> by_n;
    for (const auto& p : points) {
        auto& [sum, count] = by_n[p.num_gpus];
        sum += p.epoch_time_s;
        ++count;
    }
    std::vector<ScalingPoint> collapsed;
    collapsed.reserve(by_n.size());
    for (const auto& [n, acc] : by_n)
        collapsed.push_back({n, acc.first / static_cast<double>(acc.second)});
    return fit_from_observations(collapsed);
}

Prediction predict_epoch_time(const PowerLawFit& fit, int n) {
    if (n < 1) throw ValidationError("prediction needs n >= 1, got " + std::to_string(n));
    Prediction p;
    p.epoch_time_s = fit.alpha * std::pow(static_cast<double>(n), -fit.beta);
    p.extrapolated = n < fit.n_min || n > fit.n_max;
    return p;
}

double speedup(const PowerLawFit& fit, int n_base, int n_target) {
    return predict_epoch_time(fit, n_base).epoch_time_s / predict_epoch_time(fit, n_target).epoch_time_s;
}

double speedup(std::span<const ScalingPoint> points, int n_base, int n_target) {
    validate_points(points);
    auto mean_at = [&](int n) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& p : points) {
            if (p.num_gpus != n) continue;
            sum += p.epoch_time_s;
            ++count;
        }
        if (count == 0)
            throw ValidationError("no measured epoch times at N=" + std::to_string(n));
        return sum / static_cast<double>(count);
    };
    return mean_at(n_base) / mean_at(n_target);
}

std::optional<int> detect_saturation_knee(std::span<const ScalingPoint> points,
                                          double relative_residual_threshold) {
    if (!(relative_residual_threshold > 0.0))
        throw ValidationError("knee detection threshold must be > 0");
    validate_points(points);
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].num_gpus < points[i - 1].num_gpus)
            throw ValidationError("knee detection requires points sorted by num_gpus");

    std::vector<int> distinct;
    for (const auto& p : points)
        if (distinct.empty() || distinct.back() != p.num_gpus) distinct.push_back(p.num_gpus);
    if (distinct.size() < 4)
        throw ValidationError("knee detection needs at least 4 distinct GPU counts, got " +
                              std::to_string(distinct.size()));

    auto relative_residual = [](const PowerLawFit& fit, const ScalingPoint& p) {
        const double predicted = fit.alpha * std::pow(static_cast<double>(p.num_gpus), -fit.beta);
        return std::abs(p.epoch_time_s - predicted) / predicted;
    };
    auto all_within = [&](const PowerLawFit& fit, std::span<const ScalingPoint> subset) {
        return std::all_of(subset.begin(), subset.end(), [&](const ScalingPoint& p) {
            return relative_residual(fit, p) <= relative_residual_threshold;
        });
    };

    const PowerLawFit full = fit_power_law(points);
    if (all_within(full, points)) return std::nullopt;

    // first_at[k]: index of the first observation at distinct[k]
    std::vector<std::size_t> first_at(distinct.size() + 1, points.size());
    for (std::size_t k = 0, i = 0; k < distinct.size(); ++k) {
        while (points[i].num_gpus != distinct[k]) ++i;
        first_at[k] = i;
    }

    // Shortest prefix wins: the knee is the first GPU count whose successor
    // group departs from the prefix's own fit, not the last.
    for (std::size_t k = 3; k < distinct.size(); ++k) {
        const auto prefix = points.subspan(0, first_at[k]);
        const auto next_group =
            points.subspan(first_at[k], (k + 1 < distinct.size() ? first_at[k + 1] : points.size()) - first_at[k]);
        const PowerLawFit fit = fit_power_law(prefix);
        if (!all_within(fit, prefix)) continue;
        const bool next_all_exceed = std::all_of(next_group.begin(), next_group.end(), [&](const ScalingPoint& p) {
            return relative_residual(fit, p) > relative_residual_threshold;
        });
        if (next_all_exceed) return distinct[k - 1];
    }
    return std::nullopt;
}

FitComparison compare_fits(const PowerLawFit& a, const PowerLawFit& b) {
    auto check = [](const PowerLawFit& f, const char* which) {
        if (!(f.alpha > 0.0) || f.beta_stderr < 0.0 || f.n_points < 3)
            throw ValidationError(std::string("compare_fits: ") + which + " fit is invalid");
    };
    check(a, "first");
    check(b, "second");

    FitComparison cmp;
    cmp.beta_difference = a.beta - b.beta;
    cmp.combined_stderr = std::sqrt(a.beta_stderr * a.beta_stderr + b.beta_stderr * b.beta_stderr);
    cmp.significant = std::abs(cmp.beta_difference) > 2.0 * cmp.combined_stderr;
    return cmp;
}

} // namespace gpuscale
