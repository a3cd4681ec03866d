// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "gpuscale/metrics.hpp"

namespace gpuscale {

/// Speed and energy at one power cap, relative to the uncapped baseline.
struct TradeoffPoint {
    double power_cap_w = 0.0;
    /// Baseline epoch time over this cap's epoch time (>1 means faster).
    double relative_speed = 0.0;
    /// This cap's total energy over the baseline's (<1 means cheaper).
    double relative_energy = 0.0;

    bool operator==(const TradeoffPoint&) const = default;
};

struct CapRecommendation {
    double chosen_cap_w = 0.0;
    /// 1 - relative_energy of the chosen cap.
    double energy_saving_fraction = 0.0;
    /// 1 - relative_speed of the chosen cap; negative when the cap trains
    /// faster than the baseline.
    double slowdown_fraction = 0.0;
    /// False when no cap met the slowdown budget and the baseline was
    /// returned as the fallback.
    bool satisfied = false;
};

/// Normalizes a fixed-model, fixed-N run family against the run at
/// baseline_cap_w; one point per cap, sorted by descending cap.
std::vector<TradeoffPoint> build_tradeoff_curve(std::span<const RunMetrics> runs, double baseline_cap_w);

/// Picks the cap with the lowest relative energy among those whose
/// slowdown (1 - relative_speed) stays within max_slowdown; ties go to the
/// lower cap. When nothing qualifies, the highest cap is returned with
/// satisfied = false.
CapRecommendation select_optimal_cap(std::span<const TradeoffPoint> curve, double max_slowdown);

/// Converts joules to kilograms of CO2 via a grid intensity in grams of
/// CO2 per kilowatt-hour. Linear in both arguments.
double estimate_carbon_kg(double energy_j, double intensity_g_per_kwh);

} // namespace gpuscale
