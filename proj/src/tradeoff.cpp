// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/tradeoff.hpp"

#include <algorithm>

namespace gpuscale {

std::vector<TradeoffPoint> build_tradeoff_curve(std::span<const RunMetrics> runs, double baseline_cap_w) {
    const auto normalized = normalize_runs(runs, BaselineSelector::at_cap(baseline_cap_w));

    std::vector<TradeoffPoint> curve;
    curve.reserve(normalized.size());
    for (const auto& p : normalized)
        curve.push_back({p.axis_value, p.relative_speed, p.relative_energy});
    std::sort(curve.begin(), curve.end(),
              [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.power_cap_w > b.power_cap_w; });
    return curve;
}

CapRecommendation select_optimal_cap(std::span<const TradeoffPoint> curve, double max_slowdown) {
    if (curve.empty()) throw ValidationError("select_optimal_cap: empty trade-off curve");
    if (max_slowdown < 0.0) throw ValidationError("select_optimal_cap: max_slowdown must be >= 0");
    for (const auto& p : curve)
        if (!(p.power_cap_w > 0.0) || !(p.relative_speed > 0.0) || !(p.relative_energy > 0.0))
            throw ValidationError("select_optimal_cap: trade-off point fields must be positive");

    const TradeoffPoint* best = nullptr;
    for (const auto& p : curve) {
        const double slowdown = 1.0 - p.relative_speed;
        if (slowdown > max_slowdown) continue;
        if (!best || p.relative_energy < best->relative_energy ||
            (p.relative_energy == best->relative_energy && p.power_cap_w < best->power_cap_w))
            best = &p;
    }

    CapRecommendation rec;
    if (!best) {
        // Nothing met the budget: fall back to the highest cap (the
        // baseline when the curve contains it) and flag the failure.
        best = &*std::max_element(curve.begin(), curve.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
            return a.power_cap_w < b.power_cap_w;
        });
        rec.satisfied = false;
    } else {
        rec.satisfied = true;
    }
    rec.chosen_cap_w = best->power_cap_w;
    rec.energy_saving_fraction = 1.0 - best->relative_energy;
    rec.slowdown_fraction = 1.0 - best->relative_speed;
    return rec;
}

double estimate_carbon_kg(double energy_j, double intensity_g_per_kwh) {
    if (energy_j < 0.0) throw ValidationError("estimate_carbon_kg: energy must be >= 0");
    if (intensity_g_per_kwh < 0.0) throw ValidationError("estimate_carbon_kg: intensity must be >= 0");
    const double kwh = energy_j / 3.6e6;
    return kwh * intensity_g_per_kwh / 1000.0;
}

} // namespace gpuscale
