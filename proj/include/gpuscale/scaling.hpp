// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>

#include "gpuscale/errors.hpp"

namespace gpuscale {

/// One observation of the scaling curve: mean epoch time measured on a
/// given number of GPUs. Several points may share the same num_gpus
/// (replicate epochs or repeated runs).
struct ScalingPoint {
    int num_gpus = 0;
    double epoch_time_s = 0.0;

    bool operator==(const ScalingPoint&) const = default;
};

/// Result of the log-log power-law fit t = alpha * N^(-beta).
struct PowerLawFit {
    /// Multiplicative factor, seconds: the model's epoch time at N = 1.
    double alpha = 0.0;
    /// Scaling exponent. 1 is ideal linear scaling, 0 is no benefit.
    double beta = 0.0;
    double beta_stderr = 0.0;
    /// Standard error of ln(alpha), i.e. of the regression intercept.
    double alpha_log_stderr = 0.0;
    /// Coefficient of determination on the log-log scale; 0 by convention
    /// for a flat response.
    double r_squared = 0.0;
    int n_points = 0;
    /// Fit domain in GPUs.
    int n_min = 0;
    int n_max = 0;
};

struct FitOptions {
    /// Average replicate observations per GPU count before fitting instead
    /// of entering them individually.
    bool collapse_replicates = false;
};

/// Ordinary least squares of ln(t) on ln(N) via the closed-form normal
/// equations; beta is the negated slope, alpha the exponentiated
/// intercept. Needs at least 3 distinct GPU counts and positive times.
PowerLawFit fit_power_law(std::span<const ScalingPoint> points, const FitOptions& opts = {});

struct Prediction {
    double epoch_time_s = 0.0;
    /// Set when n lies outside the fitted [n_min, n_max] domain.
    bool extrapolated = false;
};

/// Evaluates the fitted law at n: alpha * n^(-beta).
Prediction predict_epoch_time(const PowerLawFit& fit, int n);

/// Predicted epoch-time ratio t(n_base) / t(n_target) under the fit.
double speedup(const PowerLawFit& fit, int n_base, int n_target);

/// Measured epoch-time ratio using the mean of observations at each count;
/// both counts must be present in the data.
double speedup(std::span<const ScalingPoint> points, int n_base, int n_target);

/// Finds the GPU count beyond which the data stops following a power law.
///
/// Prefix fits over growing distinct-N ranges: the knee is the largest N
/// whose prefix fit keeps every prefix point within the relative residual
/// threshold while every observation at the next distinct N exceeds it.
/// Returns empty when the full-domain fit already explains all points.
/// Points must be sorted by num_gpus and span at least 4 distinct counts.
std::optional<int> detect_saturation_knee(std::span<const ScalingPoint> points,
                                          double relative_residual_threshold = 0.25);

struct FitComparison {
    /// a.beta - b.beta
    double beta_difference = 0.0;
    /// sqrt(a.beta_stderr^2 + b.beta_stderr^2)
    double combined_stderr = 0.0;
    /// |beta_difference| > 2 * combined_stderr
    bool significant = false;
};

/// Compares two fitted scaling exponents with a two-standard-error rule.
FitComparison compare_fits(const PowerLawFit& a, const PowerLawFit& b);

} // namespace gpuscale
