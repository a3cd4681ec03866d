// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>

#include "gpuscale/errors.hpp"

namespace gpuscale::stats {

/// Maps a contiguous double span onto an Eigen array view without copying.
inline Eigen::Map<const Eigen::ArrayXd> as_array(std::span<const double> v) {
    return Eigen::Map<const Eigen::ArrayXd>(v.data(),
                                            static_cast<Eigen::Index>(v.size()));
}

template <typename Derived>
double mean(const Eigen::DenseBase<Derived>& v) {
    if (v.size() == 0) throw ValidationError("mean of empty series");
    return v.derived().array().template cast<double>().mean();
}

/// Population variance: sum((x - mean)^2) / n, no Bessel correction.
template <typename Derived>
double population_variance(const Eigen::DenseBase<Derived>& v) {
    if (v.size() == 0) throw ValidationError("variance of empty series");
    const auto a = v.derived().array().template cast<double>();
    const double m = a.mean();
    return (a - m).square().sum() / static_cast<double>(a.size());
}

template <typename Derived>
double population_stddev(const Eigen::DenseBase<Derived>& v) {
    return std::sqrt(population_variance(v));
}

/// Coefficient of variation, sigma / mu with the population sigma.
/// Returns nullopt when the mean is zero (CV undefined); throws on an
/// empty series.
template <typename Derived>
std::optional<double> coefficient_of_variation(const Eigen::DenseBase<Derived>& v) {
    if (v.size() == 0) throw ValidationError("coefficient of variation of empty series");
    const double m = mean(v);
    if (m == 0.0) return std::nullopt;
    return population_stddev(v) / m;
}

/// Simple linear regression y = intercept + slope * x via the closed-form
/// normal equations, with textbook OLS standard errors.
struct SimpleOls {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    /// 1 - SSR/SST on the given data; defined as 0 when the response has
    /// zero total variance (flat series).
    double r_squared = 0.0;
    Eigen::Index n = 0;
};

inline SimpleOls fit_simple_ols(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
    if (x.size() != y.size()) throw ValidationError("OLS inputs differ in length");
    const Eigen::Index n = x.size();
    if (n < 3) throw ValidationError("OLS needs at least 3 observations");

    const double x_mean = x.mean();
    const Eigen::ArrayXd dx = x - x_mean;
    const double sxx = dx.square().sum();
    if (sxx <= 0.0) throw ValidationError("OLS regressor has zero variance");

    if (y.maxCoeff() == y.minCoeff()) {
        // Exactly constant response: report it as such instead of letting
        // summation rounding manufacture a microscopic slope and an
        // ill-defined R^2 out of zero signal.
        SimpleOls fit;
        fit.n = n;
        fit.slope = 0.0;
        fit.intercept = y[0];
        fit.r_squared = 0.0;
        return fit;
    }

    const double y_mean = y.mean();
    const Eigen::ArrayXd dy = y - y_mean;
    const double sxy = (dx * dy).sum();

    SimpleOls fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = y_mean - fit.slope * x_mean;

    const Eigen::ArrayXd resid = y - (fit.intercept + fit.slope * x);
    const double ssr = resid.square().sum();
    const double sst = dy.square().sum();
    fit.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;

    const double sigma2 = ssr / static_cast<double>(n - 2);
    fit.slope_stderr = std::sqrt(sigma2 / sxx);
    fit.intercept_stderr =
        std::sqrt(sigma2 * (1.0 / static_cast<double>(n) + x_mean * x_mean / sxx));
    return fit;
}

} // namespace gpuscale::stats
