// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "gpuscale/telemetry.hpp"

namespace gpuscale {

/// Which experiment family a reference estimate belongs to: the uncapped
/// headline measurement, a power-cap sweep row, or a clock-cap sweep row.
enum class Sweep { baseline, power_cap, clock_cap };

std::string_view to_string(Sweep s);

/// A published scaling-exponent estimate for one well-known training
/// workload on a V100 cluster, stored for regression-free comparison
/// against locally fitted values. Estimates are kept verbatim, including
/// known inconsistencies between sweeps (ResNet50 carries both 0.52 from
/// the headline table and 0.84 from its 250 W sweep row); this module does
/// not reconcile them.
struct ReferenceFit {
    std::string_view model;
    Domain domain;
    Sweep sweep;
    double power_cap_w;
    double clock_cap_mhz;
    double beta;
    double r_squared;
    /// Published standard error of beta, where available.
    std::optional<double> beta_stderr;
};

inline constexpr std::array<ReferenceFit, 18> kReferenceFits{{
    // Uncapped headline estimates (250 W, 1380 MHz)
    {"DimeNet", Domain::geometric, Sweep::baseline, 250.0, 1380.0, 0.82, 0.99, 0.03},
    {"SchNet", Domain::geometric, Sweep::baseline, 250.0, 1380.0, 0.42, 0.90, 0.05},
    {"BERT", Domain::nlp, Sweep::baseline, 250.0, 1380.0, 0.87, 0.97, 0.03},
    {"ResNet50", Domain::vision, Sweep::baseline, 250.0, 1380.0, 0.52, 0.95, std::nullopt},
    {"VGG16", Domain::vision, Sweep::baseline, 250.0, 1380.0, 0.64, 0.98, std::nullopt},
    {"InceptionV3", Domain::vision, Sweep::baseline, 250.0, 1380.0, 0.44, 0.93, std::nullopt},
    // DimeNet clock-cap sweep at 250 W
    {"DimeNet", Domain::geometric, Sweep::clock_cap, 250.0, 135.0, 0.97, 1.0, std::nullopt},
    {"DimeNet", Domain::geometric, Sweep::clock_cap, 250.0, 735.0, 0.90, 0.99, std::nullopt},
    {"DimeNet", Domain::geometric, Sweep::clock_cap, 250.0, 1380.0, 0.82, 0.99, std::nullopt},
    // DimeNet power-cap sweep at 1380 MHz
    {"DimeNet", Domain::geometric, Sweep::power_cap, 100.0, 1380.0, 0.93, 0.99, std::nullopt},
    {"DimeNet", Domain::geometric, Sweep::power_cap, 200.0, 1380.0, 0.84, 0.99, std::nullopt},
    {"DimeNet", Domain::geometric, Sweep::power_cap, 250.0, 1380.0, 0.82, 0.99, std::nullopt},
    // BERT power-cap sweep at 1380 MHz
    {"BERT", Domain::nlp, Sweep::power_cap, 100.0, 1380.0, 0.91, 0.99, std::nullopt},
    {"BERT", Domain::nlp, Sweep::power_cap, 200.0, 1380.0, 0.86, 0.99, std::nullopt},
    {"BERT", Domain::nlp, Sweep::power_cap, 250.0, 1380.0, 0.87, 0.99, std::nullopt},
    // ResNet50 power-cap sweep at 1380 MHz
    {"ResNet50", Domain::vision, Sweep::power_cap, 100.0, 1380.0, 0.83, 1.0, std::nullopt},
    {"ResNet50", Domain::vision, Sweep::power_cap, 200.0, 1380.0, 0.83, 0.99, std::nullopt},
    {"ResNet50", Domain::vision, Sweep::power_cap, 250.0, 1380.0, 0.84, 0.99, std::nullopt},
}};

/// Looks up one reference estimate; model comparison is case-insensitive.
/// Returns nullptr when no such row exists.
const ReferenceFit* find_reference_fit(std::string_view model, Sweep sweep, double power_cap_w,
                                       double clock_cap_mhz);

} // namespace gpuscale
